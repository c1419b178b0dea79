#include "bkf/experiments.hpp"

#include "bkf/error.hpp"
#include "bkf/gibbs_linear.hpp"
#include "bkf/gibbs_probit.hpp"
#include "bkf/knockoff_model.hpp"
#include "bkf/csv.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

namespace bkf {

std::string_view to_string(CovarianceCase c) noexcept {
  switch (c) {
    case CovarianceCase::Independent: return "independent";
    case CovarianceCase::AutoCorr: return "autocorr";
    case CovarianceCase::EquiCorr: return "equicorr";
  }
  return "unknown";
}

std::string_view to_string(PriorChoice c) noexcept {
  return c == PriorChoice::Flat ? "flat" : "spike-slab";
}

std::string_view to_string(ResponseKind c) noexcept {
  return c == ResponseKind::Linear ? "linear" : "probit";
}

std::string_view to_string(KnockoffSource c) noexcept {
  return c == KnockoffSource::TrueSigma ? "true" : "estimated";
}

void validate(const ExperimentSpec& s) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
  if (s.n < 2) bad("n must be >= 2");
  if (s.p < 1) bad("p must be >= 1");
  if (s.v < 0 || s.v > s.p) bad("v must satisfy 0 <= v <= p");
  if (!(s.a >= 0.0)) bad("a must be >= 0");
  if (!(s.sigma2 > 0.0)) bad("sigma2 must be > 0");
  if (!(s.rho >= 0.0 && s.rho < 1.0)) bad("rho must lie in [0, 1)");
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) bad("alpha must lie in (0, 1)");
  if (s.burn_in < 0) bad("burn_in must be >= 0");
  if (s.samples < 1) bad("samples must be >= 1");
  if (s.thin < 1) bad("thin must be >= 1");
  if (s.replications < 1) bad("replications must be >= 1");
  if (!(s.slack > 0.0 && s.slack <= 1.0)) bad("slack must lie in (0, 1]");
  if (s.prior == PriorChoice::SpikeSlab) {
    if (!(s.xi > 0.0 && s.xi < 1.0)) bad("xi must lie in (0, 1)");
    if (!(s.tau > 0.0)) bad("tau must be > 0");
    if (s.response == ResponseKind::Probit) bad("the probit sampler supports the flat prior only");
  }
}

Matrix covariance_matrix(CovarianceCase cov_case, double rho, Index p) {
  Matrix m = Matrix::Identity(p, p);
  if (cov_case == CovarianceCase::Independent || rho == 0.0) return m;
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (i == j) continue;
      m(i, j) = cov_case == CovarianceCase::AutoCorr
                    ? std::pow(rho, static_cast<double>(std::abs(i - j)))
                    : rho;
    }
  }
  return m;
}

SyntheticData generate_dataset(const ExperimentSpec& spec, RngStream& rng) {
  validate(spec);
  const Index n = spec.n;
  const Index p = spec.p;
  SyntheticData out;
  out.sigma = SymmetricMatrix(covariance_matrix(spec.cov_case, spec.rho, p));

  std::vector<std::size_t> idx(static_cast<std::size_t>(p));
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  for (std::size_t j = 0; j < static_cast<std::size_t>(spec.v); ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng.below(idx.size() - j));
    std::swap(idx[j], idx[pick]);
  }
  out.h1.assign(idx.begin(), idx.begin() + spec.v);
  std::sort(out.h1.begin(), out.h1.end());
  out.beta = Vector::Zero(p);
  for (const std::size_t j : out.h1) {
    out.beta(static_cast<Index>(j)) = spec.a * (2.0 * rng.uniform() - 1.0);
  }

  const CholeskyFactor chol = cholesky(out.sigma);
  Matrix x(n, p);
  Vector z(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(j) = rng.normal();
    x.row(i) = (chol.lower() * z).transpose();
  }
  Vector eta = x * out.beta;
  Vector y(n);
  if (spec.response == ResponseKind::Linear) {
    const double sd = std::sqrt(spec.sigma2);
    for (Index i = 0; i < n; ++i) y(i) = eta(i) + sd * rng.normal();
  } else {
    for (Index i = 0; i < n; ++i) y(i) = eta(i) + rng.normal() > 0.0 ? 1.0 : 0.0;
  }
  out.data.x = std::move(x);
  out.data.y = std::move(y);
  out.data.response = spec.response;
  for (Index j = 0; j < p; ++j) out.data.feature_names.push_back("X" + std::to_string(j + 1));
  return out;
}

Score score(const std::vector<std::size_t>& selected, const std::vector<std::size_t>& h1,
            std::size_t p) {
  for (const auto j : selected)
    if (j >= p) throw Error(ErrorCode::IndexOutOfRange, "selected index out of range");
  for (const auto j : h1)
    if (j >= p) throw Error(ErrorCode::IndexOutOfRange, "H1 index out of range");
  std::vector<char> in_h1(p, 0);
  for (const auto j : h1) in_h1[j] = 1;
  std::size_t true_pos = 0;
  for (const auto j : selected) true_pos += in_h1[j];
  const std::size_t false_pos = selected.size() - true_pos;
  Score s;
  s.fdp = static_cast<double>(false_pos) / static_cast<double>(std::max<std::size_t>(selected.size(), 1));
  s.power = h1.empty() ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(h1.size());
  return s;
}

std::uint64_t replication_seed(std::uint64_t master_seed, int replication) noexcept {
  return splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(replication) + 1));
}

ReplicationResult run_replication(const ExperimentSpec& spec, int rep) {
  ReplicationResult out;
  out.rep = rep;
  out.seed = replication_seed(spec.master_seed, rep);
  const auto start = std::chrono::steady_clock::now();
  try {
    RngStream data_rng(out.seed, stream_id(0, 0));
    SyntheticData syn = generate_dataset(spec, data_rng);
    out.h1 = syn.h1;

    Dataset data = syn.data;
    MomentEstimate moments;
    if (spec.knockoffs == KnockoffSource::TrueSigma) {
      moments = {Vector::Zero(spec.p), syn.sigma, 0.0, spec.n};
    } else {
      data.x = standardize_columns(syn.data.x);
      moments = estimate_moments(data.x, true);
    }
    const Vector s = construct_s_equicorrelated(moments.cov, spec.slack);
    const KnockoffJointModel model = build_joint_model(moments, s);

    ChainConfig config;
    config.burn_in = spec.burn_in;
    config.samples = spec.samples;
    config.thin = spec.thin;
    config.seed = out.seed;
    config.stream = stream_id(0, 1);
    config.record_delta = false;

    Trace trace;
    if (spec.response == ResponseKind::Linear) {
      LinearPrior prior = FlatPrior{};
      if (spec.prior == PriorChoice::SpikeSlab) prior = SpikeSlabPrior{spec.xi, spec.tau * spec.tau};
      trace = run_chain_linear(data, model, prior, config);
    } else {
      trace = run_chain_probit(data, model, config);
    }
    const SelectionResult sel =
        select_from_trace(trace.beta, trace.betak, spec.statistic, spec.alpha, spec.tie_rule);
    out.selected = sel.selected;
    const Score sc = score(out.selected, out.h1, static_cast<std::size_t>(spec.p));
    out.fdp = sc.fdp;
    out.power = sc.power;
  } catch (const Error& e) {
    out.failed = true;
    out.error = e.what();
  }
  out.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  validate(spec);
  ExperimentResult result;
  result.spec = spec;
  result.reps.resize(static_cast<std::size_t>(spec.replications));
  const int workers = std::max(1, std::min(jobs, spec.replications));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r = next.fetch_add(1); r < spec.replications; r = next.fetch_add(1)) {
      result.reps[static_cast<std::size_t>(r)] = run_replication(spec, r);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  double sum_fdp = 0.0, sum_pow = 0.0, sum_pow2 = 0.0;
  for (const auto& r : result.reps) {
    if (r.failed) {
      ++result.failed;
      continue;
    }
    ++result.completed;
    sum_fdp += r.fdp;
    sum_pow += r.power;
  }
  if (result.completed > 0) {
    result.mean_fdr = sum_fdp / result.completed;
    result.mean_power = sum_pow / result.completed;
    for (const auto& r : result.reps) {
      if (!r.failed) sum_pow2 += (r.power - result.mean_power) * (r.power - result.mean_power);
    }
    result.sd_power = result.completed > 1 ? std::sqrt(sum_pow2 / (result.completed - 1)) : 0.0;
  }
  return result;
}

std::string replications_csv(const ExperimentResult& result) {
  std::ostringstream os;
  csv::Writer w(os);
  w.field("rep").field("seed").field("fdp").field("power").field("n_selected").field("runtime_s");
  w.end_row();
  for (const auto& r : result.reps) {
    w.field(r.rep).field(std::to_string(r.seed));
    if (r.failed) {
      w.field("NA").field("NA").field("NA");
    } else {
      w.field(r.fdp).field(r.power).field(r.selected.size());
    }
    if (result.spec.timing) {
      w.field(r.runtime_s);
    } else {
      w.field("NA");
    }
    w.end_row();
  }
  return os.str();
}

std::string aggregate_csv(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  csv::Writer w(os);
  for (const char* h : {"n", "p", "a", "sigma2", "rho", "case", "v", "response", "prior",
                        "mean_fdr", "mean_power", "sd_power", "R"}) {
    w.field(h);
  }
  w.end_row();
  for (const auto& r : results) {
    const auto& s = r.spec;
    w.field(static_cast<long>(s.n)).field(static_cast<long>(s.p)).field(s.a).field(s.sigma2);
    w.field(s.rho).field(to_string(s.cov_case)).field(static_cast<long>(s.v));
    w.field(to_string(s.response)).field(to_string(s.prior));
    w.field(r.mean_fdr).field(r.mean_power).field(r.sd_power).field(r.completed);
    w.end_row();
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Spec file parsing

namespace {

struct GridBuilder {
  ExperimentSpec base;
  std::vector<double> n, p, a, sigma2, rho, v;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidSpec, "key '" + key + "': not a number: '" + text + "'");
  }
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) {
      throw Error(ErrorCode::InvalidSpec, "key '" + key + "': range must be start:stop:step");
    }
    const double start = to_number(key, parts[0]);
    const double stop = to_number(key, parts[1]);
    const double step = to_number(key, parts[2]);
    if (!(step > 0.0) || stop < start) {
      throw Error(ErrorCode::InvalidSpec, "key '" + key + "': empty or invalid range");
    }
    for (long k = 0;; ++k) {
      double v = start + static_cast<double>(k) * step;
      if (v > stop + 1e-9 * step) break;
      v = std::round(v * 1e12) / 1e12;
      out.push_back(v);
    }
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(to_number(key, t));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidSpec, "key '" + key + "': empty list");
  return out;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(ErrorCode::InvalidSpec, "key '" + key + "': expected a boolean, got '" + text + "'");
}

std::vector<double> range(double start, double stop, double step) {
  return to_list("range", std::to_string(start) + ":" + std::to_string(stop) + ":" + std::to_string(step));
}

void apply_preset(GridBuilder& g, const std::string& name) {
  g = GridBuilder{};
  ExperimentSpec& b = g.base;
  b.p = 30;
  b.v = 10;
  b.sigma2 = 4.0;
  b.alpha = 0.1;
  b.burn_in = 500;
  b.samples = 2000;
  b.prior = PriorChoice::Flat;
  if (name == "signal-sweep") {
    g.n = {100, 200, 500, 1000};
    g.a = range(0.2, 4.0, 0.2);
  } else if (name == "autocorr-sweep" || name == "equicorr-sweep") {
    b.cov_case = name == "autocorr-sweep" ? CovarianceCase::AutoCorr : CovarianceCase::EquiCorr;
    b.a = 4.0;
    g.n = {100, 200, 500, 1000};
    g.rho = range(0.0, 0.9, 0.1);
  } else if (name == "sparse-independent" || name == "sparse-autocorr") {
    b.n = 200;
    b.a = 4.0;
    b.prior = PriorChoice::SpikeSlab;
    b.xi = 0.1;
    b.tau = 1.0;
    if (name == "sparse-autocorr") {
      b.cov_case = CovarianceCase::AutoCorr;
      b.rho = 0.6;
    }
    g.p = {100, 200, 500, 1000};
    g.v = range(1.0, 30.0, 1.0);
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown preset '" + name + "'");
  }
}

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& text,
                std::initializer_list<std::pair<const char*, Enum>> options) {
  for (const auto& [name, value] : options) {
    if (text == name) return value;
  }
  throw Error(ErrorCode::InvalidSpec, "key '" + key + "': unknown value '" + text + "'");
}

}  // namespace

std::vector<std::string> experiment_presets() {
  return {"signal-sweep", "autocorr-sweep", "equicorr-sweep", "sparse-independent",
          "sparse-autocorr"};
}

std::vector<ExperimentSpec> parse_experiment_spec(std::string_view text) {
  GridBuilder g;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidSpec,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    ExperimentSpec& b = g.base;

    if (key == "preset") apply_preset(g, value);
    else if (key == "n") g.n = to_list(key, value);
    else if (key == "p") g.p = to_list(key, value);
    else if (key == "a") g.a = to_list(key, value);
    else if (key == "sigma2") g.sigma2 = to_list(key, value);
    else if (key == "rho") g.rho = to_list(key, value);
    else if (key == "v") g.v = to_list(key, value);
    else if (key == "case") {
      b.cov_case = parse_enum<CovarianceCase>(key, value,
                                              {{"independent", CovarianceCase::Independent},
                                               {"autocorr", CovarianceCase::AutoCorr},
                                               {"equicorr", CovarianceCase::EquiCorr}});
    } else if (key == "response") {
      b.response = parse_enum<ResponseKind>(
          key, value, {{"linear", ResponseKind::Linear}, {"probit", ResponseKind::Probit}});
    } else if (key == "prior") {
      b.prior = parse_enum<PriorChoice>(
          key, value, {{"flat", PriorChoice::Flat}, {"spike-slab", PriorChoice::SpikeSlab}});
    } else if (key == "knockoffs") {
      b.knockoffs = parse_enum<KnockoffSource>(
          key, value, {{"true", KnockoffSource::TrueSigma}, {"estimated", KnockoffSource::Estimated}});
    } else if (key == "statistic") {
      const auto kind = parse_statistic_kind(value);
      if (!kind) throw Error(ErrorCode::InvalidSpec, "key 'statistic': unknown value '" + value + "'");
      b.statistic = *kind;
    } else if (key == "tie_rule") {
      const auto rule = parse_tie_rule(value);
      if (!rule) throw Error(ErrorCode::InvalidSpec, "key 'tie_rule': unknown value '" + value + "'");
      b.tie_rule = *rule;
    } else if (key == "xi") b.xi = to_number(key, value);
    else if (key == "tau") b.tau = to_number(key, value);
    else if (key == "alpha") b.alpha = to_number(key, value);
    else if (key == "slack") b.slack = to_number(key, value);
    else if (key == "burn_in") b.burn_in = static_cast<int>(to_number(key, value));
    else if (key == "samples") b.samples = static_cast<int>(to_number(key, value));
    else if (key == "thin") b.thin = static_cast<int>(to_number(key, value));
    else if (key == "replications") b.replications = static_cast<int>(to_number(key, value));
    else if (key == "seed") {
      try {
        b.master_seed = std::stoull(value);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidSpec, "key 'seed': not an unsigned integer: '" + value + "'");
      }
    } else if (key == "full") {
      if (to_bool(key, value)) b.replications = 100;
    } else if (key == "timing") b.timing = to_bool(key, value);
    else {
      throw Error(ErrorCode::InvalidSpec, "unknown key '" + key + "' on line " + std::to_string(line_no));
    }
  }

  auto or_base = [](const std::vector<double>& list, double base) {
    return list.empty() ? std::vector<double>{base} : list;
  };
  const auto ns = or_base(g.n, static_cast<double>(g.base.n));
  const auto ps = or_base(g.p, static_cast<double>(g.base.p));
  const auto as = or_base(g.a, g.base.a);
  const auto s2s = or_base(g.sigma2, g.base.sigma2);
  const auto rhos = or_base(g.rho, g.base.rho);
  const auto vs = or_base(g.v, static_cast<double>(g.base.v));

  std::vector<ExperimentSpec> grid;
  for (double n : ns)
    for (double p : ps)
      for (double a : as)
        for (double s2 : s2s)
          for (double rho : rhos)
            for (double v : vs) {
              ExperimentSpec s = g.base;
              s.n = static_cast<Index>(n);
              s.p = static_cast<Index>(p);
              s.a = a;
              s.sigma2 = s2;
              s.rho = rho;
              s.v = static_cast<Index>(v);
              validate(s);
              grid.push_back(s);
            }
  return grid;
}

}  // namespace bkf
