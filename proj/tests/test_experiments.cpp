#include <doctest.h>

#include "bkf/error.hpp"
#include "bkf/experiments.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <set>

using namespace bkf;

namespace {

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorCode::InvalidParameter, "");
}

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.n = 120;
  s.p = 6;
  s.v = 2;
  s.a = 3.0;
  s.burn_in = 50;
  s.samples = 200;
  s.replications = 4;
  s.master_seed = 77;
  return s;
}

}  // namespace

TEST_CASE("covariance examples") {
  for (auto c : {CovarianceCase::Independent, CovarianceCase::AutoCorr, CovarianceCase::EquiCorr})
    CHECK(covariance_matrix(c, 0.0, 4) == Matrix::Identity(4, 4));
  Matrix want(3, 3);
  want << 1, .6, .36, .6, 1, .6, .36, .6, 1;
  CHECK(test::max_abs(covariance_matrix(CovarianceCase::AutoCorr, 0.6, 3) - want) < 1e-15);
  const Matrix eq = covariance_matrix(CovarianceCase::EquiCorr, 0.3, 3);
  CHECK(eq(0, 2) == doctest::Approx(0.3));
  CHECK(eq(1, 1) == 1.0);
}

TEST_CASE("generated covariance matrices are positive definite") {
  for (auto c : {CovarianceCase::AutoCorr, CovarianceCase::EquiCorr})
    for (int k = 0; k < 10; ++k) {
      const double rho = k == 9 ? 0.99 : 0.1 * k;
      for (Index p : {2, 10, 50}) {
        const Eigen::SelfAdjointEigenSolver<Matrix> es(covariance_matrix(c, rho, p));
        CHECK(es.eigenvalues().minCoeff() > 0.0);
      }
    }
}

TEST_CASE("score examples") {
  const Score perfect = score({1, 4}, {1, 4}, 6);
  CHECK(perfect.fdp == 0.0);
  CHECK(perfect.power == 1.0);
  const Score none = score({}, {1, 4}, 6);
  CHECK(none.fdp == 0.0);
  CHECK(none.power == 0.0);
  const Score mixed = score({0, 1, 2}, {1, 2, 3, 4}, 6);
  CHECK(mixed.fdp == doctest::Approx(1.0 / 3.0));
  CHECK(mixed.power == doctest::Approx(0.5));
  CHECK(score({2}, {}, 3).power == 0.0);
  CHECK(error_of([] { score({7}, {1}, 6); }).code() == ErrorCode::IndexOutOfRange);
  CHECK(error_of([] { score({1}, {6}, 6); }).code() == ErrorCode::IndexOutOfRange);
}

TEST_CASE("score stays in the unit interval") {
  RngStream rng(1);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t p = 1 + rng.below(20);
    std::vector<std::size_t> s, h;
    for (std::size_t j = 0; j < p; ++j) {
      if (rng.uniform() < 0.4) s.push_back(j);
      if (rng.uniform() < 0.3) h.push_back(j);
    }
    const Score sc = score(s, h, p);
    CHECK(sc.fdp >= 0.0);
    CHECK(sc.fdp <= 1.0);
    CHECK(sc.power >= 0.0);
    CHECK(sc.power <= 1.0);
  }
}

TEST_CASE("generate_dataset structure") {
  RngStream rng(2);
  ExperimentSpec s;
  s.n = 4000;
  s.p = 8;
  s.v = 3;
  s.a = 2.0;
  s.rho = 0.5;
  s.cov_case = CovarianceCase::AutoCorr;
  const SyntheticData d = generate_dataset(s, rng);
  CHECK(d.data.x.rows() == 4000);
  CHECK(d.data.x.cols() == 8);
  CHECK(d.h1.size() == 3);
  CHECK(std::is_sorted(d.h1.begin(), d.h1.end()));
  for (Index j = 0; j < 8; ++j) {
    const bool active = std::find(d.h1.begin(), d.h1.end(), static_cast<std::size_t>(j)) != d.h1.end();
    if (active) {
      CHECK(std::abs(d.beta(j)) <= 2.0);
    } else {
      CHECK(d.beta(j) == 0.0);
    }
  }
  const Matrix emp = d.data.x.transpose() * d.data.x / 4000.0;
  CHECK(test::max_abs(emp - covariance_matrix(CovarianceCase::AutoCorr, 0.5, 8)) < 0.1);
  const Vector resid = d.data.y - d.data.x * d.beta;
  CHECK(resid.squaredNorm() / 4000.0 == doctest::Approx(4.0).epsilon(0.1));

  s.response = ResponseKind::Probit;
  const SyntheticData pb = generate_dataset(s, rng);
  CHECK(((pb.data.y.array() == 0.0) || (pb.data.y.array() == 1.0)).all());

  std::vector<int> hits(8, 0);
  ExperimentSpec u = s;
  u.n = 2;
  for (int rep = 0; rep < 4000; ++rep)
    for (auto j : generate_dataset(u, rng).h1) ++hits[j];
  for (int h : hits) CHECK(std::abs(h / 4000.0 - 3.0 / 8.0) < 0.04);

  ExperimentSpec bad = s;
  bad.v = 9;
  CHECK(error_of([&] { generate_dataset(bad, rng); }).code() == ErrorCode::InvalidSpec);
}

TEST_CASE("spec validation") {
  auto code = [](auto mutate) {
    ExperimentSpec s;
    mutate(s);
    return error_of([&] { validate(s); }).code();
  };
  CHECK(code([](ExperimentSpec& s) { s.sigma2 = 0.0; }) == ErrorCode::InvalidSpec);
  CHECK(code([](ExperimentSpec& s) { s.rho = 1.0; }) == ErrorCode::InvalidSpec);
  CHECK(code([](ExperimentSpec& s) { s.alpha = 1.0; }) == ErrorCode::InvalidSpec);
  CHECK(code([](ExperimentSpec& s) { s.v = s.p + 1; }) == ErrorCode::InvalidSpec);
  CHECK_NOTHROW(validate(ExperimentSpec{}));
}

TEST_CASE("spec parser") {
  const auto grid = parse_experiment_spec(
      "# sweep\n"
      "n = 500\n"
      "p = 30\n"
      "a = 0.2:4:0.2\n"
      "burn-in = 100\n"
      "prior = spike-slab\n"
      "case = autocorr\n"
      "rho = 0.6\n"
      "seed = 5\n");
  REQUIRE(grid.size() == 20);
  CHECK(grid.front().a == doctest::Approx(0.2));
  CHECK(grid.back().a == doctest::Approx(4.0));
  CHECK(grid[4].a == doctest::Approx(1.0));
  CHECK(grid[0].burn_in == 100);
  CHECK(grid[0].prior == PriorChoice::SpikeSlab);
  CHECK(grid[0].cov_case == CovarianceCase::AutoCorr);
  CHECK(grid[0].master_seed == 5u);

  const auto product = parse_experiment_spec("n = 100, 200\np = 10\nv = 1, 2, 3\n");
  CHECK(product.size() == 6);
  std::set<std::pair<Index, Index>> seen;
  for (const auto& s : product) seen.insert({s.n, s.v});
  CHECK(seen.size() == 6);

  const Error unknown = error_of([] { parse_experiment_spec("n = 10\nbogus_key = 3\n"); });
  CHECK(unknown.code() == ErrorCode::InvalidSpec);
  CHECK(std::string(unknown.what()).find("bogus_key") != std::string::npos);
  CHECK(error_of([] { parse_experiment_spec("n = abc\n"); }).code() == ErrorCode::InvalidSpec);
  CHECK(error_of([] { parse_experiment_spec("prior = weird\n"); }).code() == ErrorCode::InvalidSpec);
  CHECK(error_of([] { parse_experiment_spec("n\n"); }).code() == ErrorCode::InvalidSpec);
  CHECK(parse_experiment_spec("full = true\n").front().replications == 100);
}

TEST_CASE("presets") {
  const auto names = experiment_presets();
  REQUIRE_FALSE(names.empty());
  for (const auto& name : names) {
    const auto grid = parse_experiment_spec("preset = " + name + "\n");
    CHECK_FALSE(grid.empty());
    for (const auto& s : grid) CHECK_NOTHROW(validate(s));
  }
  const auto a_grid = parse_experiment_spec("preset = signal-sweep\n");
  CHECK(a_grid.size() >= 20);
  const auto overridden = parse_experiment_spec("preset = signal-sweep\nreplications = 3\n");
  CHECK(overridden.front().replications == 3);
  CHECK(error_of([] { parse_experiment_spec("preset = nope\n"); }).code() == ErrorCode::InvalidSpec);
}

TEST_CASE("replication seeds differ") {
  std::set<std::uint64_t> seeds;
  for (int r = 0; r < 1000; ++r) seeds.insert(replication_seed(1, r));
  CHECK(seeds.size() == 1000);
  CHECK(replication_seed(1, 3) == replication_seed(1, 3));
  CHECK(replication_seed(1, 3) != replication_seed(2, 3));
}

TEST_CASE("experiment output is independent of the worker count") {
  const ExperimentSpec s = small_spec();
  const ExperimentResult one = run_experiment(s, 1);
  const ExperimentResult two = run_experiment(s, 2);
  CHECK(replications_csv(one) == replications_csv(two));
  CHECK(aggregate_csv({one}) == aggregate_csv({two}));
  CHECK(one.completed == 4);
  CHECK(one.failed == 0);
  CHECK(replications_csv(one).find("NA") != std::string::npos);
  for (const auto& r : one.reps) {
    CHECK(r.fdp >= 0.0);
    CHECK(r.power <= 1.0);
  }
}

TEST_CASE("single replication aggregate") {
  ExperimentSpec s = small_spec();
  s.replications = 1;
  const ExperimentResult r = run_experiment(s, 1);
  REQUIRE(r.reps.size() == 1);
  CHECK(r.mean_fdr == r.reps[0].fdp);
  CHECK(r.mean_power == r.reps[0].power);
  CHECK(r.sd_power == 0.0);
  CHECK(run_replication(s, 0).selected == r.reps[0].selected);
}

TEST_CASE("failed replications are recorded") {
  ExperimentSpec s = small_spec();
  s.n = 10;  // flat prior needs n > 2p
  s.replications = 2;
  const ExperimentResult r = run_experiment(s, 1);
  CHECK(r.failed == 2);
  CHECK(r.completed == 0);
  CHECK_FALSE(r.reps[0].error.empty());
}

TEST_CASE("zero signal rarely selects anything") {
  ExperimentSpec s;
  s.n = 200;
  s.p = 10;
  s.v = 3;
  s.a = 0.0;
  s.burn_in = 200;
  s.samples = 1000;
  s.replications = 40;
  s.master_seed = 11;
  const ExperimentResult r = run_experiment(s, 1);
  int nonempty = 0;
  for (const auto& rep : r.reps) nonempty += !rep.selected.empty();
  CHECK(nonempty <= 4);
}
