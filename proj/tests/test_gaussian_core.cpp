#include <doctest.h>

#include "bkf/error.hpp"
#include "bkf/gaussian_core.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>

using namespace bkf;

namespace {

// Mean of N(mu, 1) truncated to (lo, inf); independent closed form via erfc.
double truncated_mean_below(double mu, double lo) {
  const double a = lo - mu;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  const double q = 0.5 * std::erfc(a / std::sqrt(2.0));
  return mu + phi / q;
}

std::vector<double> tn_draws(double mu, double lo, double hi, int n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) {
    x = sample_truncated_normal(mu, lo, hi, rng);
    REQUIRE(std::isfinite(x));
    REQUIRE(x > lo);
    REQUIRE(x < hi);
  }
  return out;
}

}  // namespace

TEST_CASE("symmetric matrix is built from the lower triangle") {
  Matrix m(2, 2);
  m << 1.0, 99.0, 2.0, 3.0;
  const SymmetricMatrix s(m);
  CHECK(s(0, 1) == 2.0);
  CHECK(s(1, 0) == 2.0);
  CHECK(s.max_abs() == 3.0);
  CHECK(SymmetricMatrix::identity(3).dense() == Matrix::Identity(3, 3));
}

TEST_CASE("cholesky examples") {
  CHECK(cholesky(SymmetricMatrix::identity(3)).lower() == Matrix::Identity(3, 3));
  Matrix m(2, 2);
  m << 4, 2, 2, 3;
  const Matrix l = cholesky(SymmetricMatrix(m)).lower();
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == doctest::Approx(1.0));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("cholesky reconstructs random SPD matrices up to p = 200") {
  RngStream rng(17);
  for (Index p : {1, 2, 10, 37, 100, 200}) {
    const Matrix m = test::random_spd(p, rng);
    const CholeskyFactor c = cholesky(SymmetricMatrix(m));
    CHECK((c.lower().diagonal().array() > 0.0).all());
    CHECK(test::max_abs(c.reconstruct() - m) <= 1e-10 * test::max_abs(m));
    CHECK(test::max_abs(c.lower().triangularView<Eigen::StrictlyUpper>().toDenseMatrix()) == 0.0);
  }
}

TEST_CASE("cholesky solves and inverts") {
  RngStream rng(3);
  const Matrix m = test::random_spd(8, rng);
  const CholeskyFactor c = cholesky(SymmetricMatrix(m));
  const Vector b = test::random_vector(8, rng);
  CHECK(test::max_abs(m * c.solve(b) - b) < 1e-12);
  CHECK(test::max_abs(c.lower().transpose() * c.solve_upper(b) - b) < 1e-12);
  CHECK(test::max_abs(m * c.inverse() - Matrix::Identity(8, 8)) < 1e-12);
  CHECK(c.log_det() == doctest::Approx(std::log(m.determinant())).epsilon(1e-12));
}

TEST_CASE("cholesky rejects non positive definite input") {
  Matrix m(2, 2);
  m << 1, 1, 1, 1;
  CHECK_THROWS_AS(cholesky(SymmetricMatrix(m)), Error);
  try {
    cholesky(SymmetricMatrix(m));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
  m << -1, 0, 0, 1;
  CHECK_THROWS_AS(cholesky(SymmetricMatrix(m)), Error);
}

TEST_CASE("sample_mvn degenerate factor returns the mean") {
  RngStream rng(1);
  Vector mean(3);
  mean << 1, -2, 3;
  const CholeskyFactor zero(Matrix::Zero(3, 3));
  CHECK(sample_mvn(mean, zero, rng) == mean);
  CHECK_THROWS_AS(sample_mvn(Vector::Zero(2), zero, rng), Error);
}

TEST_CASE("sample_mvn moments") {
  const int n = 100000;
  RngStream rng(23);
  const CholeskyFactor id = cholesky(SymmetricMatrix::identity(2));
  Vector s = Vector::Zero(2);
  for (int i = 0; i < n; ++i) s += sample_mvn(Vector::Zero(2), id, rng);
  s /= n;
  CHECK(std::abs(s(0)) <= 0.02);
  CHECK(std::abs(s(1)) <= 0.02);

  Matrix target(3, 3);
  target << 1.0, 0.5, -0.3, 0.5, 2.0, 0.4, -0.3, 0.4, 1.5;
  const CholeskyFactor c = cholesky(SymmetricMatrix(target));
  Matrix acc = Matrix::Zero(3, 3);
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_mvn(Vector::Zero(3), c, rng);
    acc += x * x.transpose();
    mean += x;
  }
  mean /= n;
  const Matrix cov = acc / n - mean * mean.transpose();
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(std::abs(cov(i, j) - target(i, j)) <= 3.0 * (1.0 + std::abs(target(i, j))) / std::sqrt(n));

  Matrix corr(2, 2);
  corr << 1, 0.5, 0.5, 1;
  const CholeskyFactor cc = cholesky(SymmetricMatrix(corr));
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_mvn(Vector::Zero(2), cc, rng);
    sxy += x(0) * x(1);
    sxx += x(0) * x(0);
    syy += x(1) * x(1);
  }
  CHECK(sxy / std::sqrt(sxx * syy) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("truncated normal moment checks") {
  const int n = 100000;
  CHECK(std::abs(test::mean_of(tn_draws(0.0, 0.0, kInf, n, 1)) - 0.7979) <= 0.01);
  CHECK(std::abs(test::mean_of(tn_draws(0.0, -kInf, 0.0, n, 2)) + 0.7979) <= 0.01);
  CHECK(std::abs(test::mean_of(tn_draws(5.0, 0.0, kInf, n, 3)) - 5.0) <= 0.01);
  CHECK(truncated_mean_below(5.0, 0.0) == doctest::Approx(5.0000015).epsilon(1e-7));
}

TEST_CASE("truncated normal far tails and two-sided intervals") {
  const int n = 50000;
  const auto far = tn_draws(0.0, 8.0, kInf, n, 4);
  CHECK(test::mean_of(far) == doctest::Approx(truncated_mean_below(0.0, 8.0)).epsilon(0.002));
  const auto far_neg = tn_draws(0.0, -kInf, -9.0, n, 5);
  CHECK(test::mean_of(far_neg) == doctest::Approx(-truncated_mean_below(0.0, 9.0)).epsilon(0.002));
  const auto shifted = tn_draws(-20.0, 0.0, kInf, n, 6);
  CHECK(test::mean_of(shifted) == doctest::Approx(truncated_mean_below(-20.0, 0.0)).epsilon(0.005));

  // narrow interval: nearly uniform on (1, 1.01)
  const auto narrow = tn_draws(0.0, 1.0, 1.01, n, 7);
  CHECK(test::mean_of(narrow) == doctest::Approx(1.005).epsilon(1e-4));
  // symmetric two-sided window around the mean
  const auto window = tn_draws(2.0, 1.0, 3.0, n, 8);
  CHECK(std::abs(test::mean_of(window) - 2.0) < 0.01);
}

TEST_CASE("truncated normal rejects empty intervals") {
  RngStream rng(1);
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, 1.0, rng), Error);
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 2.0, 1.0, rng), Error);
}

TEST_CASE("inverse gamma moments") {
  const int n = 100000;
  RngStream rng(31);
  std::vector<double> a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a[i] = sample_inverse_gamma(3.0, 2.0, rng);
    b[i] = sample_inverse_gamma(10.0, 9.0, rng);
    c[i] = sample_inverse_gamma(1.0, 1.0, rng);
    REQUIRE(a[i] > 0.0);
  }
  CHECK(std::abs(test::mean_of(a) - 1.0) <= 0.02);
  CHECK(std::abs(test::mean_of(b) - 1.0) <= 0.01);
  std::nth_element(c.begin(), c.begin() + n / 2, c.end());
  CHECK(std::abs(c[n / 2] - 1.0 / std::log(2.0)) <= 0.05);
  CHECK_THROWS_AS(sample_inverse_gamma(0.0, 1.0, rng), Error);
  CHECK_THROWS_AS(sample_inverse_gamma(1.0, 0.0, rng), Error);
}

TEST_CASE("regularize_to_pd") {
  RngStream rng(4);
  const Matrix pd = test::random_spd(4, rng);
  const Regularized r = regularize_to_pd(SymmetricMatrix(pd), 1e-8);
  CHECK(r.jitter == 0.0);
  CHECK(r.matrix.dense() == pd);

  Matrix ones(2, 2);
  ones << 1, 1, 1, 1;
  const Regularized r2 = regularize_to_pd(SymmetricMatrix(ones), 1e-8);
  CHECK(r2.jitter > 0.0);
  CHECK_NOTHROW(cholesky(r2.matrix));

  const Matrix x = test::random_matrix(10, 30, rng);
  const Vector mu = x.colwise().mean();
  const Matrix c = x.rowwise() - mu.transpose();
  const Matrix cov = c.transpose() * c / 9.0;
  const Regularized r3 = regularize_to_pd(SymmetricMatrix(cov), 1e-8);
  CHECK(r3.jitter > 0.0);
  CHECK_NOTHROW(cholesky(r3.matrix));

  Matrix bad(1, 1);
  bad << -1e300;
  CHECK_THROWS_AS(regularize_to_pd(SymmetricMatrix(bad), 1e-300), Error);
}
