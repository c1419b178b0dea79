#include "bkf/gibbs_common.hpp"

#include "bkf/error.hpp"
#include "bkf/kernels/kernels.hpp"

#include <cmath>
#include <string>

namespace bkf {

void validate(const ChainConfig& config) {
  if (config.burn_in < 0) throw Error(ErrorCode::InvalidParameter, "burn_in must be >= 0");
  if (config.samples < 1) throw Error(ErrorCode::InvalidParameter, "samples must be >= 1");
  if (config.thin < 1) throw Error(ErrorCode::InvalidParameter, "thin must be >= 1");
  if (config.knockoff_snapshot_every < 0) {
    throw Error(ErrorCode::InvalidParameter, "knockoff_snapshot_every must be >= 0");
  }
  if (!(config.ridge >= 0.0)) throw Error(ErrorCode::InvalidParameter, "ridge must be >= 0");
}

RowConditional knockoff_row_conditional(const KnockoffJointModel& model, const Vector& beta,
                                        const Vector& betak, double noise_var,
                                        const Vector& x_row, double target) {
  const Index p = model.p();
  if (beta.size() != p || betak.size() != p || x_row.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "knockoff row conditional: length mismatch");
  }
  if ((model.s().array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidParameter, "knockoff row conditional needs s_j > 0");
  }
  const Matrix& a = model.precision();
  Matrix prec = a + betak * betak.transpose() / noise_var;
  Matrix cov = cholesky(SymmetricMatrix(prec)).inverse();
  Matrix lin = Matrix(model.s().cwiseInverse().asDiagonal()) - a -
               betak * beta.transpose() / noise_var;
  Vector mean = cov * (lin * x_row + betak * (target / noise_var));
  return {std::move(mean), std::move(cov)};
}

RowConditional knockoff_row_conditional_rank_one(const KnockoffJointModel& model,
                                                 const Vector& beta, const Vector& betak,
                                                 double noise_var, const Vector& x_row,
                                                 double target) {
  const Index p = model.p();
  if (beta.size() != p || betak.size() != p || x_row.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "knockoff row conditional: length mismatch");
  }
  const Matrix& v = model.conditional_cov().dense();
  const Vector w = v * betak;
  const double denom = noise_var + betak.dot(w);
  const Vector m = model.conditional_mean_map() * x_row;
  const double innovation = target - x_row.dot(beta) - m.dot(betak);
  return {m + w * (innovation / denom), v - w * w.transpose() / denom};
}

void resample_knockoff_rows(const KnockoffJointModel& model, const Matrix& x,
                            const Matrix& prior_means, const Vector& target, const Vector& beta,
                            const Vector& betak, double noise_var, RngStream& rng, Matrix& xk) {
  const Index n = x.rows();
  const Index p = model.p();
  if (x.cols() != p || prior_means.rows() != n || target.size() != n || beta.size() != p ||
      betak.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "knockoff row update: shape mismatch");
  }
  if (!(noise_var > 0.0)) throw Error(ErrorCode::InvalidParameter, "noise variance must be > 0");
  xk.resize(n, p);

  const auto& k = kernels::active();
  const auto up = static_cast<std::size_t>(p);
  const auto un = static_cast<std::size_t>(n);

  // Rank-one conditioning of the prior N(C x_i, V) on the scalar observation
  // target_i = x_i'beta + x~_i'betak + eps. Cost O(p^2) per sweep, O(p) per row
  // beyond the prior noise draw.
  const Vector w = model.conditional_cov().dense() * betak;
  const double denom = noise_var + betak.dot(w);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw Error(ErrorCode::NotPositiveDefinite, "knockoff conditional covariance degenerate");
  }
  const double noise_sd = std::sqrt(noise_var);

  Matrix z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  k.rows_times(model.conditional_cov_chol().lower().data(), up, up, z.data(), up, un, xk.data(),
               up, true);

  for (Index i = 0; i < n; ++i) {
    double* row = xk.row(i).data();
    const double* m = prior_means.row(i).data();
    const double innovation = target(i) - k.dot(x.row(i).data(), beta.data(), up) -
                              k.dot(m, betak.data(), up);
    const double prior_noise_proj = k.dot(row, betak.data(), up) + noise_sd * rng.normal();
    const double gain = (innovation - prior_noise_proj) / denom;
    for (Index j = 0; j < p; ++j) row[j] += m[j];
    k.axpy(gain, w.data(), row, up);
  }
}

DesignCache make_design_cache(const KnockoffJointModel& model, const Matrix& centered_x) {
  DesignCache cache;
  cache.x = centered_x;
  cache.prior_means = conditional_means(model, centered_x);
  const auto p = static_cast<std::size_t>(centered_x.cols());
  cache.xtx = Matrix::Zero(centered_x.cols(), centered_x.cols());
  kernels::active().cross_accumulate(centered_x.data(), p, centered_x.data(), p,
                                     static_cast<std::size_t>(centered_x.rows()), p, p,
                                     cache.xtx.data());
  return cache;
}

void draw_coefficients_gaussian(const DesignCache& cache, const Matrix& xk, const Vector& target,
                                double noise_var, double ridge, RngStream& rng, Vector& beta,
                                Vector& betak) {
  const Matrix& x = cache.x;
  const Index n = x.rows();
  const Index p = x.cols();
  if (xk.rows() != n || xk.cols() != p || target.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "coefficient update: shape mismatch");
  }
  const auto& k = kernels::active();
  const auto up = static_cast<std::size_t>(p);
  const auto un = static_cast<std::size_t>(n);

  Matrix xtk = Matrix::Zero(p, p);
  Matrix ktk = Matrix::Zero(p, p);
  k.cross_accumulate(x.data(), up, xk.data(), up, un, up, up, xtk.data());
  k.cross_accumulate(xk.data(), up, xk.data(), up, un, up, up, ktk.data());

  Matrix gram(2 * p, 2 * p);
  gram.topLeftCorner(p, p) = cache.xtx;
  gram.topRightCorner(p, p) = xtk;
  gram.bottomLeftCorner(p, p) = xtk.transpose();
  gram.bottomRightCorner(p, p) = ktk;
  if (ridge > 0.0) gram.diagonal().array() += ridge;

  Vector rhs(2 * p);
  rhs.head(p) = x.transpose() * target;
  rhs.tail(p) = xk.transpose() * target;

  CholeskyFactor chol;
  try {
    chol = cholesky(SymmetricMatrix(gram));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::SingularGram,
                "Gram matrix of [X, X~] is singular (n = " + std::to_string(n) +
                    ", 2p = " + std::to_string(2 * p) +
                    "); use the spike-and-slab prior or enable ridge jitter");
  }
  Vector mean = chol.solve(rhs);
  Vector z(2 * p);
  for (Index j = 0; j < 2 * p; ++j) z(j) = rng.normal();
  Vector draw = mean + std::sqrt(noise_var) * chol.solve_upper(z);
  beta = draw.head(p);
  betak = draw.tail(p);
}

Vector residuals(const Matrix& x, const Matrix& xk, const Vector& target, const Vector& beta,
                 const Vector& betak) {
  const auto& k = kernels::active();
  const auto p = static_cast<std::size_t>(x.cols());
  Vector r(target.size());
  for (Index i = 0; i < target.size(); ++i) {
    r(i) = target(i) - k.dot(x.row(i).data(), beta.data(), p) -
           k.dot(xk.row(i).data(), betak.data(), p);
  }
  return r;
}

}  // namespace bkf
