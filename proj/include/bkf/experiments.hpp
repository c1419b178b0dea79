#pragma once

#include "bkf/gaussian_core.hpp"
#include "bkf/rng.hpp"
#include "bkf/selection.hpp"
#include "bkf/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bkf {

enum class CovarianceCase {
  Independent,  // identity
  AutoCorr,     // rho^|i-j|
  EquiCorr,     // rho^[i != j]
};

enum class PriorChoice { Flat, SpikeSlab };

// Which covariance the knockoff model is built from.
enum class KnockoffSource { TrueSigma, Estimated };

struct ExperimentSpec {
  Index n = 500;
  Index p = 30;
  double a = 2.0;
  double sigma2 = 4.0;
  double rho = 0.0;
  CovarianceCase cov_case = CovarianceCase::Independent;
  Index v = 10;
  ResponseKind response = ResponseKind::Linear;
  PriorChoice prior = PriorChoice::Flat;
  double xi = 0.1;
  double tau = 1.0;
  double alpha = 0.1;
  int burn_in = 500;
  int samples = 2000;
  int thin = 1;
  int replications = 50;
  std::uint64_t master_seed = 20240601;
  FeatureStatisticKind statistic = FeatureStatisticKind::AbsDiff;
  TieRule tie_rule = TieRule::Bound;
  KnockoffSource knockoffs = KnockoffSource::TrueSigma;
  double slack = 0.95;
  bool timing = false;  // write wall-clock seconds instead of NA
};

void validate(const ExperimentSpec& spec);

std::string_view to_string(CovarianceCase c) noexcept;
std::string_view to_string(PriorChoice c) noexcept;
std::string_view to_string(ResponseKind c) noexcept;
std::string_view to_string(KnockoffSource c) noexcept;

Matrix covariance_matrix(CovarianceCase cov_case, double rho, Index p);

struct SyntheticData {
  Dataset data;
  Vector beta;
  std::vector<std::size_t> h1;  // ascending
  SymmetricMatrix sigma;
};

/// Features MVN(0, Sigma_rho); H1 a uniform size-v subset with beta_j ~ U[-a, a].
/// Linear: y = X beta + N(0, sigma2). Probit: y = 1[X beta + N(0, 1) > 0].
SyntheticData generate_dataset(const ExperimentSpec& spec, RngStream& rng);

struct Score {
  double fdp = 0.0;
  double power = 0.0;
};

/// FDP = |S \ H1| / max(|S|, 1), power = |S n H1| / |H1| (0 when H1 is empty).
Score score(const std::vector<std::size_t>& selected, const std::vector<std::size_t>& h1,
            std::size_t p);

std::uint64_t replication_seed(std::uint64_t master_seed, int replication) noexcept;

struct ReplicationResult {
  int rep = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> h1;
  std::vector<std::size_t> selected;
  double fdp = 0.0;
  double power = 0.0;
  double runtime_s = 0.0;
  bool failed = false;
  std::string error;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<ReplicationResult> reps;
  double mean_fdr = 0.0;
  double mean_power = 0.0;
  double sd_power = 0.0;
  int completed = 0;
  int failed = 0;
};

/// generate -> knockoff model -> chain -> select -> score, for one replication.
ReplicationResult run_replication(const ExperimentSpec& spec, int rep);

/// Runs spec.replications replications on up to jobs worker threads. Results are
/// independent of jobs and scheduling. Failed replications are recorded and
/// excluded from the aggregates.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

/// Per-replication CSV: rep, seed, fdp, power, n_selected, runtime_s.
std::string replications_csv(const ExperimentResult& result);

/// One row per grid point: coordinates then mean_fdr, mean_power, sd_power, R.
std::string aggregate_csv(const std::vector<ExperimentResult>& results);

/// Key = value configuration with '#' comments. List-valued keys (n, p, a, sigma2,
/// rho, v) accept comma lists or start:stop:step ranges; their Cartesian product
/// forms the grid. "preset" loads a named design first.
std::vector<ExperimentSpec> parse_experiment_spec(std::string_view text);

/// Names accepted by the preset key.
std::vector<std::string> experiment_presets();

}  // namespace bkf
