#pragma once

#include "bkf/rng.hpp"
#include "bkf/types.hpp"

#include <limits>

namespace bkf {

/// Square symmetric matrix. Built from the lower triangle of the source, so the
/// stored matrix is exactly symmetric regardless of rounding in the input.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& lower_source);

  static SymmetricMatrix identity(Index p);

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& dense() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double max_abs() const;

 private:
  Matrix m_;
};

/// Lower-triangular L with L L^T equal to the source matrix.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  explicit CholeskyFactor(Matrix lower) : l_(std::move(lower)) {}

  Index dim() const noexcept { return l_.rows(); }
  const Matrix& lower() const noexcept { return l_; }

  Matrix reconstruct() const;
  // Solve M x = b where M = L L^T.
  Vector solve(const Vector& b) const;
  // x = L^{-T} b, i.e. solve L^T x = b.
  Vector solve_upper(const Vector& b) const;
  Matrix inverse() const;
  double log_det() const;

 private:
  Matrix l_;
};

/// Fails with NotPositiveDefinite when a pivot is at or below p * eps * max-diagonal.
CholeskyFactor cholesky(const SymmetricMatrix& m);

/// mean + L z with z standard normal.
Vector sample_mvn(const Vector& mean, const CholeskyFactor& chol, RngStream& rng);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Draw from N(mu, 1) restricted to the interval (lower, upper). Endpoints may be
/// infinite. Uses the inverse CDF near the bulk and exponential rejection in far tails.
double sample_truncated_normal(double mu, double lower, double upper, RngStream& rng);

/// Inverse-gamma with density proportional to x^{-shape-1} exp(-rate / x).
double sample_inverse_gamma(double shape, double rate, RngStream& rng);

struct Regularized {
  SymmetricMatrix matrix;
  double jitter = 0.0;
};

/// Smallest c in {0, jitter_start * 2^k : k < 60} for which m + cI factorizes.
Regularized regularize_to_pd(const SymmetricMatrix& m, double jitter_start);

}  // namespace bkf
