#include "bkf/knockoff_model.hpp"

#include "bkf/error.hpp"
#include "bkf/kernels/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace bkf {
namespace {

void require_finite(const Matrix& data) {
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      if (!std::isfinite(data(i, j))) {
        throw Error(ErrorCode::NonFiniteInput, "non-finite value at row " + std::to_string(i) +
                                                   ", column " + std::to_string(j));
      }
    }
  }
}

Matrix cross_product(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.cols(), b.cols());
  kernels::active().cross_accumulate(a.data(), static_cast<std::size_t>(a.cols()), b.data(),
                                     static_cast<std::size_t>(b.cols()),
                                     static_cast<std::size_t>(a.rows()),
                                     static_cast<std::size_t>(a.cols()),
                                     static_cast<std::size_t>(b.cols()), out.data());
  return out;
}

}  // namespace

Matrix standardize_columns(const Matrix& data, Standardization* out) {
  require_finite(data);
  const Index n = data.rows();
  if (n < 2) throw Error(ErrorCode::InvalidParameter, "standardization needs at least 2 rows");
  Vector center = data.colwise().mean().transpose();
  Matrix z = data.rowwise() - center.transpose();
  Vector scale(data.cols());
  for (Index j = 0; j < data.cols(); ++j) {
    const double var = z.col(j).squaredNorm() / static_cast<double>(n - 1);
    if (!(var > 0.0)) {
      throw Error(ErrorCode::DegenerateColumn, "column " + std::to_string(j) + " has zero variance");
    }
    scale(j) = std::sqrt(var);
    z.col(j) /= scale(j);
  }
  if (out != nullptr) *out = {std::move(center), std::move(scale)};
  return z;
}

MomentEstimate estimate_moments(const Matrix& data, bool standardize) {
  require_finite(data);
  const Index n = data.rows();
  const Index p = data.cols();
  if (n < 2) throw Error(ErrorCode::InvalidParameter, "moment estimation needs n >= 2");

  Matrix centered;
  Vector mean;
  if (standardize) {
    centered = standardize_columns(data);
    mean = Vector::Zero(p);
  } else {
    mean = data.colwise().mean().transpose();
    centered = data.rowwise() - mean.transpose();
  }
  Matrix cov = cross_product(centered, centered) / static_cast<double>(n - 1);
  if (standardize) cov.diagonal().setOnes();

  const double mean_diag = p > 0 ? cov.diagonal().mean() : 1.0;
  const double jitter_start = 1e-8 * (mean_diag > 0.0 ? mean_diag : 1.0);
  Regularized reg = regularize_to_pd(SymmetricMatrix(cov), jitter_start);
  if (standardize && reg.jitter > 0.0) {
    Matrix rescaled = reg.matrix.dense() / (1.0 + reg.jitter);
    rescaled.diagonal().setOnes();
    reg.matrix = SymmetricMatrix(rescaled);
  }
  return {std::move(mean), std::move(reg.matrix), reg.jitter, n};
}

Vector construct_s_equicorrelated(const SymmetricMatrix& sigma, double slack) {
  if (!(slack > 0.0 && slack <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "slack must lie in (0, 1]");
  }
  const Index p = sigma.dim();
  for (Index j = 0; j < p; ++j) {
    if (std::abs(sigma(j, j) - 1.0) > 1e-8) {
      throw Error(ErrorCode::InvalidParameter,
                  "equicorrelated construction expects a correlation matrix (diagonal entry " +
                      std::to_string(j) + " = " + std::to_string(sigma(j, j)) + ")");
    }
  }
  cholesky(sigma);  // NotPositiveDefinite propagates
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(sigma.dense()),
                                                     Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  Vector s = Vector::Constant(p, slack * std::min(2.0 * lambda_min, 1.0));

  // V must factor strictly; this raises NotPositiveDefinite at the boundary slack = 1.
  build_joint_model({Vector::Zero(p), sigma, 0.0, 0}, s);
  return s;
}

KnockoffJointModel::KnockoffJointModel(Vector mean, SymmetricMatrix sigma, Vector s)
    : mean_(std::move(mean)), sigma_(std::move(sigma)), s_(std::move(s)) {
  const Index p = sigma_.dim();
  if (mean_.size() != p || s_.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "knockoff model: mean, sigma and s disagree on p");
  }
  for (Index j = 0; j < p; ++j) {
    if (!(s_(j) >= 0.0) || !std::isfinite(s_(j))) {
      throw Error(ErrorCode::InvalidParameter, "knockoff diagonal entries must be >= 0");
    }
  }
  sigma_inv_ = cholesky(sigma_).inverse();
  const auto ds = s_.asDiagonal();
  c_ = Matrix::Identity(p, p) - ds * sigma_inv_;
  Matrix v = Matrix(2.0 * ds) - ds * sigma_inv_ * ds;
  v_ = SymmetricMatrix(v);
  v_chol_ = cholesky(v_);
  a_ = v_chol_.inverse();
}

Matrix KnockoffJointModel::joint_covariance() const {
  const Index p = this->p();
  Matrix g(2 * p, 2 * p);
  Matrix cross = sigma_.dense();
  cross.diagonal() -= s_;
  g.topLeftCorner(p, p) = sigma_.dense();
  g.bottomRightCorner(p, p) = sigma_.dense();
  g.topRightCorner(p, p) = cross;
  g.bottomLeftCorner(p, p) = cross;
  return g;
}

KnockoffJointModel build_joint_model(const MomentEstimate& moments, const Vector& s) {
  if (moments.mean.size() != moments.cov.dim() || s.size() != moments.cov.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "moment estimate and s have different dimensions");
  }
  return KnockoffJointModel(moments.mean, moments.cov, s);
}

Matrix conditional_means(const KnockoffJointModel& model, const Matrix& x_rows) {
  if (x_rows.cols() != model.p()) {
    throw Error(ErrorCode::DimensionMismatch, "rows have " + std::to_string(x_rows.cols()) +
                                                  " columns, model has p = " +
                                                  std::to_string(model.p()));
  }
  const auto p = static_cast<std::size_t>(model.p());
  Matrix out(x_rows.rows(), model.p());
  kernels::active().rows_times(model.conditional_mean_map().data(), p, p, x_rows.data(), p,
                               static_cast<std::size_t>(x_rows.rows()), out.data(), p, false);
  return out;
}

Matrix sample_knockoffs_marginal(const KnockoffJointModel& model, const Matrix& x_rows,
                                 RngStream& rng) {
  Matrix out = conditional_means(model, x_rows);
  const Index n = x_rows.rows();
  const Index p = model.p();
  Matrix z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  Matrix noise(n, p);
  const auto up = static_cast<std::size_t>(p);
  kernels::active().rows_times(model.conditional_cov_chol().lower().data(), up, up, z.data(), up,
                               static_cast<std::size_t>(n), noise.data(), up, true);
  out += noise;
  return out;
}

double delta_statistic(const Matrix& x_rows, const Matrix& xk_rows) {
  if (x_rows.rows() != xk_rows.rows() || x_rows.cols() != xk_rows.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "delta statistic: shapes differ");
  }
  const Index n = x_rows.rows();
  if (n == 0) return 0.0;
  const auto p = static_cast<std::size_t>(x_rows.cols());
  const auto un = static_cast<std::size_t>(n);
  const auto& k = kernels::active();
  const double kk = k.offdiag_cross_sum(xk_rows.data(), p, xk_rows.data(), p, un, p);
  const double xk = k.offdiag_cross_sum(x_rows.data(), p, xk_rows.data(), p, un, p);
  const double xx = k.offdiag_cross_sum(x_rows.data(), p, x_rows.data(), p, un, p);
  return (kk + 2.0 * xk - 3.0 * xx) / static_cast<double>(n);
}

}  // namespace bkf
