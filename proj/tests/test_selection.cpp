#include <doctest.h>

#include "bkf/error.hpp"
#include "bkf/selection.hpp"
#include "test_support.hpp"

#include <functional>

using namespace bkf;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidParameter;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Largest |S| over all subsets with mean p_hat <= alpha.
std::size_t exhaustive_best(const Vector& p_hat, double alpha) {
  const auto p = static_cast<unsigned>(p_hat.size());
  std::size_t best = 0;
  for (unsigned mask = 1; mask < (1u << p); ++mask) {
    double sum = 0.0;
    std::size_t size = 0;
    for (unsigned j = 0; j < p; ++j)
      if (mask >> j & 1u) {
        sum += p_hat(j);
        ++size;
      }
    if (sum / static_cast<double>(size) <= alpha) best = std::max(best, size);
  }
  return best;
}

Vector random_p_hat(Index p, RngStream& rng) {
  Vector v(p);
  for (Index j = 0; j < p; ++j) {
    const double u = rng.uniform();
    v(j) = u < 0.3 ? 0.0 : (u < 0.5 ? 0.5 * rng.uniform() * rng.uniform() : rng.uniform());
    if (rng.uniform() < 0.1) v(j) = 1.0;
  }
  return v;
}

}  // namespace

TEST_CASE("feature statistic examples") {
  const Vector b = vec({2.0}), bk = vec({0.5});
  CHECK(feature_statistics(b, bk, FeatureStatisticKind::AbsDiff)(0) == doctest::Approx(1.5));
  CHECK(feature_statistics(b, bk, FeatureStatisticKind::SquaredDiff)(0) == doctest::Approx(3.75));
  CHECK(feature_statistics(b, bk, FeatureStatisticKind::SignedSum)(0) == doctest::Approx(2.5));
  for (auto kind : {FeatureStatisticKind::AbsDiff, FeatureStatisticKind::SquaredDiff, FeatureStatisticKind::SignedSum}) {
    CHECK(feature_statistics(vec({-1.3}), vec({-1.3}), kind)(0) == 0.0);
    CHECK(code_of([&] { feature_statistics(vec({1, 2}), vec({1}), kind); }) == ErrorCode::DimensionMismatch);
  }
  CHECK(parse_statistic_kind(to_string(FeatureStatisticKind::SignedSum)) == FeatureStatisticKind::SignedSum);
  CHECK_FALSE(parse_statistic_kind("bogus").has_value());
}

TEST_CASE("feature statistics are antisymmetric") {
  RngStream rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const Index p = 1 + static_cast<Index>(rng.below(20));
    Vector b = test::random_vector(p, rng), bk = test::random_vector(p, rng);
    for (Index j = 0; j < p; ++j)
      if (rng.uniform() < 0.2) (rng.uniform() < 0.5 ? b : bk)(j) = 0.0;
    for (auto kind : {FeatureStatisticKind::AbsDiff, FeatureStatisticKind::SquaredDiff, FeatureStatisticKind::SignedSum}) {
      const Vector w = feature_statistics(b, bk, kind);
      const Vector ws = feature_statistics(bk, b, kind);
      CHECK((w + ws).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  const Matrix tb = test::random_matrix(5, 3, rng), tk = test::random_matrix(5, 3, rng);
  const Matrix wt = feature_statistics_trace(tb, tk, FeatureStatisticKind::AbsDiff);
  for (Index t = 0; t < 5; ++t)
    CHECK(test::max_abs(wt.row(t).transpose() -
                        feature_statistics(tb.row(t).transpose(), tk.row(t).transpose(), FeatureStatisticKind::AbsDiff)) == 0.0);
}

TEST_CASE("null bound examples") {
  Matrix w(4, 3);
  w << -1.0, 1.0, -1.0,  //
      2.0, 2.0, -1.0,    //
      3.0, 3.0, -1.0,    //
      -0.5, 4.0, 2.0;
  const NullBounds nb = estimate_null_bounds(w);
  CHECK(nb.p_hat(0) == doctest::Approx(1.0));
  CHECK(nb.p_hat(1) == 0.0);
  CHECK(nb.p_hat(2) == 1.0);
  CHECK(nb.negative_count[2] == 3);
  CHECK(nb.draws == 4);
  CHECK(code_of([] { estimate_null_bounds(Matrix(0, 3)); }) == ErrorCode::EmptyTrace);
}

TEST_CASE("tie rules") {
  Matrix w(4, 2);
  w << 0.0, 1.0,  //
      0.0, 0.0,   //
      1.0, 0.0,   //
      1.0, -1.0;
  const NullBounds strict = estimate_null_bounds(w, TieRule::StrictNegative);
  CHECK(strict.p_hat(0) == 0.0);
  CHECK(strict.p_hat(1) == doctest::Approx(0.5));
  CHECK(strict.zero_count[0] == 2);
  CHECK(strict.zero_count[1] == 2);
  const NullBounds bound = estimate_null_bounds(w, TieRule::Bound);
  CHECK(bound.p_hat(0) == doctest::Approx(0.5));
  CHECK(bound.p_hat(1) == doctest::Approx(1.0));

  // without ties the rules coincide
  RngStream rng(2);
  const Matrix g = test::random_matrix(50, 6, rng);
  CHECK(test::max_abs(estimate_null_bounds(g, TieRule::Bound).p_hat -
                      estimate_null_bounds(g, TieRule::StrictNegative).p_hat) < 1e-15);
  CHECK(parse_tie_rule(to_string(TieRule::StrictNegative)) == TieRule::StrictNegative);
}

TEST_CASE("null bounds stay inside the unit interval") {
  RngStream rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    Matrix w = test::random_matrix(1 + static_cast<Index>(rng.below(30)), 4, rng);
    w.array() += rng.normal();
    for (auto rule : {TieRule::Bound, TieRule::StrictNegative}) {
      const Vector p = estimate_null_bounds(w, rule).p_hat;
      CHECK((p.array() >= 0.0).all());
      CHECK((p.array() <= 1.0).all());
    }
  }
}

TEST_CASE("bfdr examples") {
  const Vector p = vec({0.02, 0.05, 0.3});
  CHECK(bfdr({}, p) == 0.0);
  CHECK(bfdr({0, 1}, p) == doctest::Approx(0.035));
  CHECK(bfdr({0, 1, 2}, Vector::Constant(3, 0.4)) == doctest::Approx(0.4));
  CHECK(code_of([&] { bfdr({3}, p); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("greedy selection examples") {
  const SelectionResult r = greedy_select(vec({0.02, 0.05, 0.3}), 0.1);
  REQUIRE(r.prefix_bfdr.size() == 3);
  CHECK(r.prefix_bfdr[0] == doctest::Approx(0.02));
  CHECK(r.prefix_bfdr[1] == doctest::Approx(0.035));
  CHECK(r.prefix_bfdr[2] == doctest::Approx(0.37 / 3.0));
  CHECK(r.selected == std::vector<std::size_t>{0, 1});
  CHECK(r.k == 2);
  CHECK(greedy_select(Vector::Constant(5, 0.5), 0.1).selected.empty());
  const SelectionResult ties = greedy_select(vec({0.1, 0.0, 0.1, 0.0}), 0.5);
  CHECK(ties.order == std::vector<std::size_t>{1, 3, 0, 2});
  for (double a : {0.0, 1.0, -0.1, 1.5})
    CHECK(code_of([&] { greedy_select(vec({0.1}), a); }) == ErrorCode::InvalidAlpha);
}

TEST_CASE("greedy selection has maximal cardinality") {
  RngStream rng(4);
  for (int rep = 0; rep < 1000; ++rep) {
    const Index p = 1 + static_cast<Index>(rng.below(12));
    const Vector ph = random_p_hat(p, rng);
    const double alpha = 0.01 + 0.3 * rng.uniform();
    const SelectionResult r = greedy_select(ph, alpha);
    CHECK(r.selected.size() == exhaustive_best(ph, alpha));
    if (!r.selected.empty()) CHECK(bfdr(r.selected, ph) <= alpha + 1e-15);
  }
}

TEST_CASE("lowering one bound never shrinks the selection") {
  RngStream rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const Index p = 1 + static_cast<Index>(rng.below(15));
    Vector ph = random_p_hat(p, rng);
    const double alpha = 0.05 + 0.2 * rng.uniform();
    const std::size_t before = greedy_select(ph, alpha).selected.size();
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p)));
    ph(j) *= rng.uniform();
    CHECK(greedy_select(ph, alpha).selected.size() >= before);
  }
}

TEST_CASE("select_from_trace with a dominant signal") {
  RngStream rng(6);
  const Index t = 200, p = 5;
  Matrix b = 0.1 * test::random_matrix(t, p, rng), bk = 0.1 * test::random_matrix(t, p, rng);
  b.col(0).array() += 5.0;
  NullBounds nb;
  const SelectionResult r = select_from_trace(b, bk, FeatureStatisticKind::AbsDiff, 0.1, TieRule::Bound, &nb);
  CHECK(nb.p_hat(0) == 0.0);
  CHECK(std::find(r.selected.begin(), r.selected.end(), 0u) != r.selected.end());
}

TEST_CASE("pure-null traces select nothing") {
  int empty = 0;
  for (int rep = 0; rep < 200; ++rep) {
    RngStream rng(100 + rep);
    const Matrix b = test::random_matrix(500, 10, rng), bk = test::random_matrix(500, 10, rng);
    empty += select_from_trace(b, bk, FeatureStatisticKind::AbsDiff, 0.1).selected.empty();
  }
  CHECK(empty >= 180);
}
