#pragma once

#include "bkf/gaussian_core.hpp"
#include "bkf/rng.hpp"
#include "bkf/types.hpp"

namespace bkf {

struct MomentEstimate {
  Vector mean;
  SymmetricMatrix cov;
  double jitter = 0.0;
  Index n = 0;
};

/// Column centering and scaling applied before moment estimation.
struct Standardization {
  Vector center;
  Vector scale;
};

/// Returns the standardized copy (mean 0, unit sample variance per column).
/// Throws DegenerateColumn for a constant column, NonFiniteInput for NaN/Inf.
Matrix standardize_columns(const Matrix& data, Standardization* out = nullptr);

/// Gaussian second-order fit MVN(mean, cov) to the rows of data. With standardize
/// set the columns are first scaled to unit variance, so mean = 0 and cov is a
/// correlation matrix. cov is regularized (jitter starting at 1e-8 * mean diagonal).
MomentEstimate estimate_moments(const Matrix& data, bool standardize);

inline constexpr double kDefaultSlack = 0.95;

/// Equicorrelated knockoff diagonal: s_j = slack * min(2 lambda_min(sigma), 1).
/// sigma must have unit diagonal.
Vector construct_s_equicorrelated(const SymmetricMatrix& sigma, double slack = kDefaultSlack);

/// Joint Gaussian model of (X, X~) with cross covariance sigma - diag(s), and the
/// induced conditional law X~ | X = x ~ MVN(mean + C (x - mean), V).
class KnockoffJointModel {
 public:
  KnockoffJointModel(Vector mean, SymmetricMatrix sigma, Vector s);

  Index p() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const SymmetricMatrix& sigma() const noexcept { return sigma_; }
  const Vector& s() const noexcept { return s_; }
  // C = I - diag(s) sigma^{-1}
  const Matrix& conditional_mean_map() const noexcept { return c_; }
  // V = 2 diag(s) - diag(s) sigma^{-1} diag(s)
  const SymmetricMatrix& conditional_cov() const noexcept { return v_; }
  const CholeskyFactor& conditional_cov_chol() const noexcept { return v_chol_; }
  // A = V^{-1}
  const Matrix& precision() const noexcept { return a_; }
  const Matrix& sigma_inverse() const noexcept { return sigma_inv_; }

  // The 2p x 2p joint covariance [[S, S - D], [S - D, S]].
  Matrix joint_covariance() const;

 private:
  Vector mean_;
  SymmetricMatrix sigma_;
  Vector s_;
  Matrix sigma_inv_;
  Matrix c_;
  SymmetricMatrix v_;
  CholeskyFactor v_chol_;
  Matrix a_;
};

KnockoffJointModel build_joint_model(const MomentEstimate& moments, const Vector& s);

/// Rows C x_i (centered rows in, centered conditional means out).
Matrix conditional_means(const KnockoffJointModel& model, const Matrix& x_rows);

/// Each output row drawn from MVN(C x_i, V); rows of x must be centered by the model mean.
Matrix sample_knockoffs_marginal(const KnockoffJointModel& model, const Matrix& x_rows,
                                 RngStream& rng);

/// (1/n) sum_{j != k} sum_i (xk_ij xk_ik + 2 x_ij xk_ik - 3 x_ij x_ik), ordered pairs.
double delta_statistic(const Matrix& x_rows, const Matrix& xk_rows);

}  // namespace bkf
