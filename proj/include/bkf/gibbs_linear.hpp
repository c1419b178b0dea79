#pragma once

#include "bkf/gibbs_common.hpp"

#include <variant>

namespace bkf {

struct FlatPrior {};

// How the per-coordinate component weights are normalized.
enum class SpikeSlabWeightForm {
  // Exact marginal-likelihood weights: the null component carries sqrt(2 pi tau^2).
  BayesFactor,
  // Null weight without that constant.
  UnnormalizedNull,
};

/// Per coordinate: (beta_j, betak_j) = (0, 0) w.p. 1 - xi, otherwise exactly one of
/// the pair is N(0, tau2) with probability xi / 2 each.
struct SpikeSlabPrior {
  double xi = 0.1;
  double tau2 = 1.0;
  SpikeSlabWeightForm weight_form = SpikeSlabWeightForm::BayesFactor;
};

using LinearPrior = std::variant<FlatPrior, SpikeSlabPrior>;

void validate(const SpikeSlabPrior& prior);

struct GibbsStateLinear {
  Vector beta;
  Vector betak;
  double sigma2 = 1.0;
  Matrix xk;
  long iteration = 0;
};

struct LinearTrace : Trace {
  Vector sigma2;
};

/// Conditional weights and moments for one coordinate pair given partial residuals z.
struct SpikeSlabConditional {
  double p_null = 0.0;
  double p_original = 0.0;
  double p_knockoff = 0.0;
  double mean_original = 0.0;
  double var_original = 0.0;
  double mean_knockoff = 0.0;
  double var_knockoff = 0.0;
};

/// sxx = sum x_ij^2, sxz = sum x_ij z_ij and the knockoff analogues.
SpikeSlabConditional spike_slab_conditional(double sxx, double sxz, double skk, double skz,
                                            double sigma2, const SpikeSlabPrior& prior);

/// Shared, read-only pieces of a linear chain.
struct LinearChainContext {
  const KnockoffJointModel& model;
  DesignCache design;
  Vector y;
};

LinearChainContext make_linear_context(const KnockoffJointModel& model, const Dataset& data);

void update_coefficients_flat(GibbsStateLinear& state, const LinearChainContext& ctx,
                              RngStream& rng, double ridge = 0.0);
void update_coefficients_spikeslab(GibbsStateLinear& state, const LinearChainContext& ctx,
                                   const SpikeSlabPrior& prior, RngStream& rng,
                                   bool random_scan = false);
void update_sigma2(GibbsStateLinear& state, const LinearChainContext& ctx, RngStream& rng);
void update_knockoff_rows_linear(GibbsStateLinear& state, const LinearChainContext& ctx,
                                 RngStream& rng);

inline constexpr double kRssRateFloor = 1e-12;

/// Initial state: zero coefficients, sigma2 = sample variance of y, X~ ~ f(X~ | X).
GibbsStateLinear initial_state_linear(const LinearChainContext& ctx, RngStream& rng);

/// Gibbs sweeps in the order coefficients, sigma2, knockoff rows. data.x is
/// centered by the model mean internally. Deterministic given config.seed/stream.
LinearTrace run_chain_linear(const Dataset& data, const KnockoffJointModel& model,
                             const LinearPrior& prior, const ChainConfig& config);

}  // namespace bkf
