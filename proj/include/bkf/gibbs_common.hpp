#pragma once

#include "bkf/knockoff_model.hpp"
#include "bkf/rng.hpp"
#include "bkf/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bkf {

struct ChainConfig {
  int burn_in = 500;
  int samples = 2000;  // retained draws T
  int thin = 1;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  bool record_delta = true;
  // Keep every k-th retained X~ (0 disables).
  int knockoff_snapshot_every = 0;
  // Ridge added to the 2p x 2p Gram matrix; 0 means refuse a singular Gram.
  double ridge = 0.0;
  bool random_scan = false;
};

void validate(const ChainConfig& config);

/// Retained coefficient draws; row t is draw t.
struct Trace {
  Matrix beta;
  Matrix betak;
  Vector delta;  // empty unless record_delta
  std::vector<Matrix> knockoff_snapshots;
  std::vector<int> snapshot_draws;
  int burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<std::string> warnings;

  Index draws() const { return beta.rows(); }
  Index p() const { return beta.cols(); }
};

/// Moments of x~_i given everything else, from the closed-form full conditional
///   cov  = (A + b b^T / noise)^{-1}
///   mean = cov [ (diag(s)^{-1} - A - b beta^T / noise) x_i + b target_i / noise ].
/// Reference route; the samplers use an equivalent rank-one conditioning update.
struct RowConditional {
  Vector mean;
  Matrix cov;
};

RowConditional knockoff_row_conditional(const KnockoffJointModel& model, const Vector& beta,
                                        const Vector& betak, double noise_var,
                                        const Vector& x_row, double target);

/// Same moments through rank-one conditioning of the prior N(C x_i, V):
///   w = V betak, d = noise + betak'w, mean = C x_i + w e_i / d, cov = V - w w' / d.
RowConditional knockoff_row_conditional_rank_one(const KnockoffJointModel& model,
                                                 const Vector& beta, const Vector& betak,
                                                 double noise_var, const Vector& x_row,
                                                 double target);

/// Redraws every row of xk from its full conditional, given the response-like
/// target (y for the linear model, latent u for probit). x rows are centered,
/// prior_means holds C x_i.
void resample_knockoff_rows(const KnockoffJointModel& model, const Matrix& x,
                            const Matrix& prior_means, const Vector& target, const Vector& beta,
                            const Vector& betak, double noise_var, RngStream& rng, Matrix& xk);

/// Cross products of fixed design pieces reused across sweeps.
struct DesignCache {
  Matrix x;            // centered features
  Matrix prior_means;  // C x_i
  Matrix xtx;          // X^T X
};

DesignCache make_design_cache(const KnockoffJointModel& model, const Matrix& centered_x);

/// Joint draw of (beta, betak) from MVN(G^{-1} r, noise_var G^{-1}), with
/// G = [X X~]^T [X X~] + ridge I and r = [X X~]^T target. Throws SingularGram.
void draw_coefficients_gaussian(const DesignCache& cache, const Matrix& xk, const Vector& target,
                                double noise_var, double ridge, RngStream& rng, Vector& beta,
                                Vector& betak);

/// target - X beta - X~ betak
Vector residuals(const Matrix& x, const Matrix& xk, const Vector& target, const Vector& beta,
                 const Vector& betak);

}  // namespace bkf
