#include "bkf/gaussian_core.hpp"

#include "bkf/error.hpp"
#include "bkf/kernels/kernels.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace bkf {

SymmetricMatrix::SymmetricMatrix(const Matrix& lower_source) {
  if (lower_source.rows() != lower_source.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "symmetric matrix must be square, got " + std::to_string(lower_source.rows()) +
                    "x" + std::to_string(lower_source.cols()));
  }
  const Index p = lower_source.rows();
  m_.resize(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j <= i; ++j) {
      m_(i, j) = lower_source(i, j);
      m_(j, i) = lower_source(i, j);
    }
  }
}

SymmetricMatrix SymmetricMatrix::identity(Index p) { return SymmetricMatrix(Matrix::Identity(p, p)); }

double SymmetricMatrix::max_abs() const { return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff(); }

Matrix CholeskyFactor::reconstruct() const { return l_ * l_.transpose(); }

Vector CholeskyFactor::solve(const Vector& b) const {
  if (b.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "cholesky solve: rhs length");
  Vector y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Vector CholeskyFactor::solve_upper(const Vector& b) const {
  if (b.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "cholesky solve: rhs length");
  return l_.transpose().triangularView<Eigen::Upper>().solve(b);
}

Matrix CholeskyFactor::inverse() const {
  const Index p = dim();
  Matrix linv = l_.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
  Matrix inv = linv.transpose() * linv;
  // Symmetrize against rounding.
  return 0.5 * (inv + inv.transpose());
}

double CholeskyFactor::log_det() const { return 2.0 * l_.diagonal().array().log().sum(); }

CholeskyFactor cholesky(const SymmetricMatrix& sym) {
  const Matrix& m = sym.dense();
  const Index p = m.rows();
  Matrix l = Matrix::Zero(p, p);
  if (p == 0) return CholeskyFactor(std::move(l));

  const double max_diag = m.diagonal().maxCoeff();
  const double tol = static_cast<double>(p) * std::numeric_limits<double>::epsilon() *
                     std::max(max_diag, 0.0);
  if (!(max_diag > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite, "non-positive maximum diagonal entry");
  }
  const auto& k = kernels::active();
  for (Index j = 0; j < p; ++j) {
    const double* lj = l.row(j).data();
    const double d = m(j, j) - k.dot(lj, lj, static_cast<std::size_t>(j));
    if (!(d > tol)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(j) + " = " + std::to_string(d) +
                      " at or below tolerance " + std::to_string(tol));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < p; ++i) {
      const double s = m(i, j) - k.dot(l.row(i).data(), lj, static_cast<std::size_t>(j));
      l(i, j) = s / ljj;
    }
  }
  return CholeskyFactor(std::move(l));
}

Vector sample_mvn(const Vector& mean, const CholeskyFactor& chol, RngStream& rng) {
  if (mean.size() != chol.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "mean has length " + std::to_string(mean.size()) + ", factor has dimension " +
                    std::to_string(chol.dim()));
  }
  const Index p = mean.size();
  Vector z(p);
  for (Index i = 0; i < p; ++i) z(i) = rng.normal();
  Vector out(p);
  kernels::active().rows_times(chol.lower().data(), static_cast<std::size_t>(p),
                               static_cast<std::size_t>(p), z.data(), static_cast<std::size_t>(p),
                               p > 0 ? 1 : 0, out.data(), static_cast<std::size_t>(p), true);
  return out + mean;
}

namespace {

constexpr double kTailSwitch = 6.0;

double upper_tail(double x) { return 0.5 * boost::math::erfc(x / std::numbers::sqrt2); }
double upper_tail_inverse(double q) { return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q); }

// Robert (1995) exponential proposal for Z ~ N(0,1) restricted to (a, b) with a > 0.
double far_right_tail(double a, double b, RngStream& rng) {
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  const double width = b - a;
  const double mass = std::isinf(b) ? 1.0 : -std::expm1(-lambda * width);
  for (;;) {
    const double x = a - std::log1p(-rng.uniform() * mass) / lambda;
    const double diff = x - lambda;
    if (rng.uniform() <= std::exp(-0.5 * diff * diff) && x > a && x < b) return x;
  }
}

// Standardized draw of Z ~ N(0,1) restricted to (a, b).
double standard_truncated(double a, double b, RngStream& rng) {
  if (b <= -kTailSwitch) return -standard_truncated(-b, -a, rng);
  if (a >= kTailSwitch) return far_right_tail(a, b, rng);
  for (;;) {
    const double u = rng.uniform();
    double x;
    if (a >= 0.0) {
      const double qa = upper_tail(a);
      const double qb = std::isinf(b) ? 0.0 : upper_tail(b);
      x = upper_tail_inverse(qb + u * (qa - qb));
    } else if (b <= 0.0) {
      const double qa = std::isinf(a) ? 0.0 : upper_tail(-a);
      const double qb = upper_tail(-b);
      x = -upper_tail_inverse(qb + u * (qa - qb));
    } else {
      const double pa = std::isinf(a) ? 0.0 : upper_tail(-a);
      const double pb = std::isinf(b) ? 1.0 : 1.0 - upper_tail(b);
      const double target = pa + u * (pb - pa);
      x = target < 0.5 ? -upper_tail_inverse(target) : upper_tail_inverse(1.0 - target);
    }
    if (x > a && x < b && std::isfinite(x)) return x;
  }
}

}  // namespace

double sample_truncated_normal(double mu, double lower, double upper, RngStream& rng) {
  if (std::isnan(mu) || std::isnan(lower) || std::isnan(upper) || !(lower < upper) ||
      !std::isfinite(mu)) {
    throw Error(ErrorCode::EmptyInterval, "truncation interval (" + std::to_string(lower) + ", " +
                                              std::to_string(upper) + ") is empty");
  }
  if (std::isinf(lower) && std::isinf(upper)) return mu + rng.normal();
  return mu + standard_truncated(lower - mu, upper - mu, rng);
}

double sample_inverse_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw Error(ErrorCode::InvalidParameter, "inverse gamma requires shape > 0 and rate > 0 (got " +
                                                 std::to_string(shape) + ", " +
                                                 std::to_string(rate) + ")");
  }
  return rate / rng.gamma(shape);
}

Regularized regularize_to_pd(const SymmetricMatrix& m, double jitter_start) {
  if (!(jitter_start > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "jitter_start must be positive");
  }
  try {
    cholesky(m);
    return {m, 0.0};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
  }
  const Index p = m.dim();
  double c = jitter_start;
  for (int k = 0; k < 60; ++k, c *= 2.0) {
    SymmetricMatrix candidate(m.dense() + c * Matrix::Identity(p, p));
    try {
      cholesky(candidate);
      return {std::move(candidate), c};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    }
  }
  throw Error(ErrorCode::RegularizationFailed,
              "matrix not positive definite after 60 jitter doublings");
}

}  // namespace bkf
