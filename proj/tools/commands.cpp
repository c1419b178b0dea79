#include "commands.hpp"

#include "manifest.hpp"

#include "bkf/csv.hpp"
#include "bkf/error.hpp"
#include "bkf/experiments.hpp"
#include "bkf/gibbs_linear.hpp"
#include "bkf/gibbs_probit.hpp"
#include "bkf/kernels/kernels.hpp"
#include "bkf/knockoff_model.hpp"
#include "bkf/selection.hpp"
#include "bkf/trace_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#ifndef BKF_VERSION
#define BKF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace bkf::cli {
namespace {

[[noreturn]] void bad_flag(const std::string& msg) { throw Error(ErrorCode::InvalidFlag, msg); }

std::string num(double v) { return csv::format(v); }

std::string absolute_string(const std::string& path) {
  return fs::absolute(fs::path(path)).lexically_normal().string();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects outputs of one command and writes its manifest last.
class RunRecorder {
 public:
  RunRecorder(std::string command, fs::path out_dir)
      : out_dir_(std::move(out_dir)) {
    manifest_.command = std::move(command);
    manifest_.version = BKF_VERSION;
    manifest_.isa = std::string(kernels::to_string(kernels::active().isa));
    manifest_.started = utc_timestamp();
    fs::create_directories(out_dir_);
  }

  RunManifest& manifest() { return manifest_; }
  const fs::path& out_dir() const { return out_dir_; }

  void input(const std::string& path) {
    manifest_.inputs.push_back({absolute_string(path), sha256_file(path)});
  }

  void output(const std::string& name, const std::string& content) {
    csv::write_file_atomic(out_dir_ / name, content);
    manifest_.outputs.push_back({name, sha256_hex(content)});
  }

  void finish() {
    manifest_.finished = utc_timestamp();
    write_manifest(out_dir_ / "manifest.json", manifest_);
  }

 private:
  fs::path out_dir_;
  RunManifest manifest_;
};

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string data;
  std::string response = "y";
  std::string model = "linear";
  std::string prior = "flat";
  int burn_in = 500;
  int samples = 2000;
  int thin = 1;
  std::uint64_t seed = 1;
  double xi = 0.1;
  double tau = 1.0;
  double ridge = 0.0;
  double slack = kDefaultSlack;
  int snapshot_every = 0;
  bool export_latents = false;
  bool no_center_response = false;
  std::string out_dir = ".";
};

void add_fit_options(CLI::App& sub, FitOptions& o) {
  sub.add_option("data", o.data, "dataset CSV")->required();
  sub.add_option("--response", o.response, "response column name");
  sub.add_option("--model", o.model, "linear | probit");
  sub.add_option("--prior", o.prior, "flat | spike-slab");
  sub.add_option("--burn-in", o.burn_in);
  sub.add_option("--samples", o.samples, "retained draws T");
  sub.add_option("--thin", o.thin);
  sub.add_option("--seed", o.seed);
  sub.add_option("--xi", o.xi, "spike-and-slab inclusion probability");
  sub.add_option("--tau", o.tau, "slab standard deviation");
  sub.add_option("--ridge", o.ridge, "ridge added to the Gram matrix");
  sub.add_option("--slack", o.slack, "equicorrelated s scale in (0, 1]");
  sub.add_option("--snapshot-every", o.snapshot_every, "keep every k-th retained X~");
  sub.add_flag("--export-latents", o.export_latents, "probit: write latent u snapshots");
  sub.add_flag("--no-center-response", o.no_center_response);
  sub.add_option("--out-dir", o.out_dir);
}

std::vector<std::string> canonical_args(const FitOptions& o) {
  std::vector<std::string> a = {absolute_string(o.data),
                                "--response", o.response,
                                "--model", o.model,
                                "--prior", o.prior,
                                "--burn-in", std::to_string(o.burn_in),
                                "--samples", std::to_string(o.samples),
                                "--thin", std::to_string(o.thin),
                                "--seed", std::to_string(o.seed),
                                "--xi", num(o.xi),
                                "--tau", num(o.tau),
                                "--ridge", num(o.ridge),
                                "--slack", num(o.slack),
                                "--snapshot-every", std::to_string(o.snapshot_every)};
  if (o.export_latents) a.push_back("--export-latents");
  if (o.no_center_response) a.push_back("--no-center-response");
  return a;
}

std::string snapshots_csv(const Trace& trace) {
  std::ostringstream os;
  csv::Writer w(os);
  w.field("draw").field("row").field("feature").field("value").end_row();
  for (std::size_t k = 0; k < trace.knockoff_snapshots.size(); ++k) {
    const Matrix& xk = trace.knockoff_snapshots[k];
    for (Index i = 0; i < xk.rows(); ++i) {
      for (Index j = 0; j < xk.cols(); ++j) {
        w.field(trace.snapshot_draws[k] + 1).field(static_cast<long>(i + 1));
        w.field(static_cast<long>(j + 1)).field(xk(i, j)).end_row();
      }
    }
  }
  return os.str();
}

std::string latents_csv(const ProbitTrace& trace) {
  std::ostringstream os;
  csv::Writer w(os);
  w.field("draw");
  for (Index i = 0; i < trace.latents.cols(); ++i) w.field("u_" + std::to_string(i + 1));
  w.end_row();
  for (Index t = 0; t < trace.latents.rows(); ++t) {
    w.field(trace.snapshot_draws.empty() ? static_cast<long>(t + 1)
                                         : static_cast<long>(trace.snapshot_draws[static_cast<std::size_t>(t)] + 1));
    for (Index i = 0; i < trace.latents.cols(); ++i) w.field(trace.latents(t, i));
    w.end_row();
  }
  return os.str();
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  ResponseKind kind;
  if (o.model == "linear") kind = ResponseKind::Linear;
  else if (o.model == "probit") kind = ResponseKind::Probit;
  else bad_flag("--model must be 'linear' or 'probit', got '" + o.model + "'");
  if (o.prior != "flat" && o.prior != "spike-slab") {
    bad_flag("--prior must be 'flat' or 'spike-slab', got '" + o.prior + "'");
  }
  if (kind == ResponseKind::Probit && o.prior != "flat") {
    bad_flag("--prior spike-slab is not available with --model probit");
  }
  if (o.samples < 1) bad_flag("--samples must be >= 1");
  if (o.burn_in < 0) bad_flag("--burn-in must be >= 0");
  if (o.thin < 1) bad_flag("--thin must be >= 1");
  if (o.snapshot_every < 0) bad_flag("--snapshot-every must be >= 0");
  if (!(o.ridge >= 0.0)) bad_flag("--ridge must be >= 0");
  if (!(o.slack > 0.0 && o.slack <= 1.0)) bad_flag("--slack must lie in (0, 1]");
  if (o.prior == "spike-slab") {
    if (!(o.xi > 0.0 && o.xi < 1.0)) bad_flag("--xi must lie in (0, 1)");
    if (!(o.tau > 0.0)) bad_flag("--tau must be > 0");
  }

  RunRecorder rec("fit", o.out_dir);
  rec.input(o.data);
  Dataset data = csv::read_dataset(o.data, o.response, kind);
  if (data.n() < 2) throw Error(ErrorCode::ParseError, o.data + ": need at least 2 data rows");
  if (data.p() < 1) throw Error(ErrorCode::ParseError, o.data + ": no feature columns");

  Standardization st;
  data.x = standardize_columns(data.x, &st);
  double y_center = 0.0;
  if (kind == ResponseKind::Linear && !o.no_center_response) {
    y_center = data.y.mean();
    data.y.array() -= y_center;
  }
  const MomentEstimate moments = estimate_moments(data.x, true);
  const Vector s = construct_s_equicorrelated(moments.cov, o.slack);
  const KnockoffJointModel model = build_joint_model(moments, s);

  ChainConfig config;
  config.burn_in = o.burn_in;
  config.samples = o.samples;
  config.thin = o.thin;
  config.seed = o.seed;
  config.stream = 0;
  config.ridge = o.ridge;
  config.knockoff_snapshot_every = o.snapshot_every;
  if (o.export_latents && config.knockoff_snapshot_every == 0) config.knockoff_snapshot_every = 1;

  std::string trace_text;
  const Trace* trace = nullptr;
  LinearTrace lt;
  ProbitTrace pt;
  if (kind == ResponseKind::Linear) {
    LinearPrior prior = FlatPrior{};
    if (o.prior == "spike-slab") prior = SpikeSlabPrior{o.xi, o.tau * o.tau};
    lt = run_chain_linear(data, model, prior, config);
    trace_text = trace_to_csv(lt, &lt.sigma2);
    trace = &lt;
  } else {
    pt = run_chain_probit(data, model, config, o.export_latents);
    trace_text = trace_to_csv(pt, nullptr);
    trace = &pt;
  }
  for (const auto& w : trace->warnings) err << "warning: " << w << "\n";

  rec.output("trace.csv", trace_text);
  rec.output("delta.csv", delta_to_csv(*trace));
  {
    std::ostringstream os;
    csv::Writer w(os);
    w.field("feature").field("name").field("center").field("scale").field("s").end_row();
    for (Index j = 0; j < data.p(); ++j) {
      w.field(static_cast<long>(j + 1)).field(data.feature_names[static_cast<std::size_t>(j)]);
      w.field(st.center(j)).field(st.scale(j)).field(s(j)).end_row();
    }
    rec.output("features.csv", os.str());
  }
  if (o.snapshot_every > 0) rec.output("knockoffs.csv", snapshots_csv(*trace));
  if (kind == ResponseKind::Probit && o.export_latents) rec.output("latents.csv", latents_csv(pt));

  RunManifest& m = rec.manifest();
  m.argv = canonical_args(o);
  m.seed = o.seed;
  m.config = {{"data", absolute_string(o.data)},
              {"response", o.response},
              {"model", o.model},
              {"prior", o.prior},
              {"burn_in", o.burn_in},
              {"samples", o.samples},
              {"thin", o.thin},
              {"xi", o.xi},
              {"tau", o.tau},
              {"ridge", o.ridge},
              {"slack", o.slack},
              {"snapshot_every", o.snapshot_every},
              {"export_latents", o.export_latents},
              {"center_response", kind == ResponseKind::Linear && !o.no_center_response},
              {"response_center", y_center},
              {"moment_jitter", moments.jitter},
              {"n", data.n()},
              {"p", data.p()}};
  rec.finish();
  out << "fit: n=" << data.n() << " p=" << data.p() << " draws=" << trace->draws() << " -> "
      << (rec.out_dir() / "trace.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// select

struct SelectOptions {
  std::string trace;
  double alpha = 0.1;
  std::string statistic = "abs-diff";
  std::string tie_rule = "bound";
  std::string features;
  std::string out_dir = ".";
};

void add_select_options(CLI::App& sub, SelectOptions& o) {
  sub.add_option("trace", o.trace, "trace CSV written by fit")->required();
  sub.add_option("--alpha", o.alpha, "target Bayesian FDR in (0, 1)");
  sub.add_option("--statistic", o.statistic, "abs-diff | squared-diff | signed-sum");
  sub.add_option("--tie-rule", o.tie_rule, "bound | strict-negative");
  sub.add_option("--features", o.features, "features CSV (default: next to the trace)");
  sub.add_option("--out-dir", o.out_dir);
}

std::vector<std::string> load_feature_names(const std::string& path, Index p) {
  std::vector<std::string> names;
  for (Index j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  if (path.empty()) return names;
  const csv::Table t = csv::read(path);
  const long fcol = t.column("feature");
  const long ncol = t.column("name");
  if (fcol < 0 || ncol < 0) {
    throw Error(ErrorCode::ParseError, path + ": expected columns 'feature' and 'name'");
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double f = csv::parse_double(t.rows[r][static_cast<std::size_t>(fcol)], path, r + 2, "feature");
    const auto j = static_cast<Index>(f) - 1;
    if (j < 0 || j >= p || static_cast<double>(j + 1) != f) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(r + 2) + ": feature index out of range");
    }
    names[static_cast<std::size_t>(j)] = t.rows[r][static_cast<std::size_t>(ncol)];
  }
  return names;
}

int cmd_select(const SelectOptions& o, std::ostream& out) {
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) {
    throw Error(ErrorCode::InvalidAlpha, "--alpha must lie in the open interval (0, 1), got " + num(o.alpha));
  }
  const auto kind = parse_statistic_kind(o.statistic);
  if (!kind) bad_flag("--statistic: unknown kind '" + o.statistic + "'");
  const auto rule = parse_tie_rule(o.tie_rule);
  if (!rule) bad_flag("--tie-rule: unknown rule '" + o.tie_rule + "'");

  RunRecorder rec("select", o.out_dir);
  rec.input(o.trace);
  const LoadedTrace loaded = read_trace_csv(o.trace);
  const Trace& tr = loaded.trace;
  std::string features = o.features;
  if (features.empty()) {
    const fs::path guess = fs::path(o.trace).parent_path() / "features.csv";
    if (fs::exists(guess)) features = guess.string();
  }
  if (!features.empty()) rec.input(features);
  const auto names = load_feature_names(features, tr.p());

  NullBounds bounds;
  const SelectionResult sel = select_from_trace(tr.beta, tr.betak, *kind, o.alpha, *rule, &bounds);
  std::vector<std::size_t> rank(static_cast<std::size_t>(tr.p()));
  for (std::size_t r = 0; r < sel.order.size(); ++r) rank[sel.order[r]] = r;
  std::vector<char> chosen(rank.size(), 0);
  for (const auto j : sel.selected) chosen[j] = 1;

  std::ostringstream os;
  csv::Writer w(os);
  for (const char* h : {"feature", "name", "beta_mean", "beta_sd", "betak_mean", "betak_sd", "p_hat",
                        "zero_ties", "rank", "prefix_bfdr", "selected"}) {
    w.field(h);
  }
  w.end_row();
  const double t = static_cast<double>(tr.draws());
  for (Index j = 0; j < tr.p(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const double bm = tr.beta.col(j).mean();
    const double km = tr.betak.col(j).mean();
    const double bsd = t > 1 ? std::sqrt((tr.beta.col(j).array() - bm).square().sum() / (t - 1)) : 0.0;
    const double ksd = t > 1 ? std::sqrt((tr.betak.col(j).array() - km).square().sum() / (t - 1)) : 0.0;
    w.field(static_cast<long>(j + 1)).field(names[jj]).field(bm).field(bsd).field(km).field(ksd);
    w.field(bounds.p_hat(j)).field(bounds.zero_count[jj]).field(rank[jj] + 1);
    w.field(sel.prefix_bfdr[rank[jj]]).field(chosen[jj] ? 1 : 0).end_row();
  }
  rec.output("selection.csv", os.str());

  RunManifest& m = rec.manifest();
  m.argv = {absolute_string(o.trace), "--alpha", num(o.alpha), "--statistic", o.statistic,
            "--tie-rule", o.tie_rule};
  if (!features.empty()) {
    m.argv.push_back("--features");
    m.argv.push_back(absolute_string(features));
  }
  m.config = {{"trace", absolute_string(o.trace)}, {"alpha", o.alpha}, {"statistic", o.statistic},
              {"tie_rule", o.tie_rule}, {"features", features.empty() ? "" : absolute_string(features)},
              {"draws", tr.draws()}, {"p", tr.p()}};
  rec.finish();

  const double achieved = sel.k > 0 ? sel.prefix_bfdr[sel.k - 1] : 0.0;
  out << "select: " << sel.selected.size() << " of " << tr.p() << " features at alpha=" << num(o.alpha)
      << " (BFDR " << num(achieved) << ")\n";
  for (const auto j : sel.selected) out << "  " << names[j] << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string spec;
  std::string preset;
  int jobs = 1;
  std::string out_dir = ".";
};

void add_simulate_options(CLI::App& sub, SimulateOptions& o) {
  sub.add_option("spec", o.spec, "experiment spec file (key = value)");
  sub.add_option("--preset", o.preset, "named design, applied before the spec file");
  sub.add_option("--jobs", o.jobs, "worker threads");
  sub.add_option("--out-dir", o.out_dir);
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  if (o.spec.empty() && o.preset.empty()) bad_flag("simulate needs a spec file or --preset");
  if (o.jobs < 1) bad_flag("--jobs must be >= 1");
  std::string text;
  if (!o.preset.empty()) text = "preset = " + o.preset + "\n";
  RunRecorder rec("simulate", o.out_dir);
  if (!o.spec.empty()) {
    rec.input(o.spec);
    text += slurp(o.spec);
  }
  const std::vector<ExperimentSpec> grid = parse_experiment_spec(text);

  std::vector<ExperimentResult> results;
  auto points = nlohmann::json::array();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const ExperimentSpec& s = grid[g];
    err << "simulate: point " << g + 1 << "/" << grid.size() << " n=" << s.n << " p=" << s.p
        << " a=" << num(s.a) << " rho=" << num(s.rho) << " v=" << s.v << "\n";
    results.push_back(run_experiment(s, o.jobs));
    std::ostringstream name;
    name << "replications_" << std::setw(4) << std::setfill('0') << g + 1 << ".csv";
    rec.output(name.str(), replications_csv(results.back()));
    for (const auto& r : results.back().reps) {
      if (r.failed) err << "warning: point " << g + 1 << " replication " << r.rep << ": " << r.error << "\n";
    }
    points.push_back({{"n", s.n}, {"p", s.p}, {"a", s.a}, {"sigma2", s.sigma2}, {"rho", s.rho},
                      {"case", std::string(to_string(s.cov_case))}, {"v", s.v},
                      {"response", std::string(to_string(s.response))},
                      {"prior", std::string(to_string(s.prior))}, {"xi", s.xi}, {"tau", s.tau},
                      {"alpha", s.alpha}, {"burn_in", s.burn_in}, {"samples", s.samples},
                      {"thin", s.thin}, {"replications", s.replications},
                      {"master_seed", s.master_seed},
                      {"statistic", std::string(to_string(s.statistic))},
                      {"tie_rule", std::string(to_string(s.tie_rule))},
                      {"knockoffs", std::string(to_string(s.knockoffs))}, {"slack", s.slack},
                      {"timing", s.timing}});
  }
  rec.output("aggregate.csv", aggregate_csv(results));

  RunManifest& m = rec.manifest();
  if (!o.spec.empty()) m.argv.push_back(absolute_string(o.spec));
  if (!o.preset.empty()) {
    m.argv.push_back("--preset");
    m.argv.push_back(o.preset);
  }
  m.argv.push_back("--jobs");
  m.argv.push_back(std::to_string(o.jobs));
  m.seed = grid.empty() ? 0 : grid.front().master_seed;
  m.config = {{"spec_text", text}, {"jobs", o.jobs}, {"grid", points}};
  rec.finish();

  for (const auto& r : results) {
    out << "n=" << r.spec.n << " p=" << r.spec.p << " a=" << num(r.spec.a) << " rho=" << num(r.spec.rho)
        << " v=" << r.spec.v << ": mean_fdr=" << num(r.mean_fdr) << " mean_power=" << num(r.mean_power)
        << " sd_power=" << num(r.sd_power) << " R=" << r.completed << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseOptions {
  std::string trace;
  std::string out_dir = ".";
};

void add_diagnose_options(CLI::App& sub, DiagnoseOptions& o) {
  sub.add_option("trace", o.trace, "trace CSV written by fit")->required();
  sub.add_option("--out-dir", o.out_dir);
}

struct SeriesSummary {
  double mean = 0.0;
  double sd = 0.0;
  double lag1 = 0.0;
};

SeriesSummary summarize(const Vector& x) {
  SeriesSummary s;
  const Index t = x.size();
  if (t == 0) return s;
  s.mean = x.mean();
  const Vector c = x.array() - s.mean;
  const double ss = c.squaredNorm();
  s.sd = t > 1 ? std::sqrt(ss / static_cast<double>(t - 1)) : 0.0;
  if (t > 1 && ss > 0.0) s.lag1 = c.head(t - 1).dot(c.tail(t - 1)) / ss;
  return s;
}

struct DeltaCheck {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  long batches = 0;
  std::string status;
};

DeltaCheck check_delta(const Vector& delta) {
  DeltaCheck d;
  const Index t = delta.size();
  const SeriesSummary s = summarize(delta);
  d.mean = s.mean;
  d.sd = s.sd;
  if (t >= 4) {
    const auto b = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(t))));
    const Index m = t / b;
    Vector means(b);
    for (Index k = 0; k < b; ++k) means(k) = delta.segment(t - b * m + k * m, m).mean();
    d.batches = static_cast<long>(b);
    d.se = summarize(means).sd / std::sqrt(static_cast<double>(b));
  } else if (t > 0) {
    d.batches = static_cast<long>(t);
    d.se = s.sd / std::sqrt(static_cast<double>(t));
  }
  if (d.sd == 0.0) {
    d.status = d.mean == 0.0 ? "degenerate" : "fail";
  } else {
    d.status = std::abs(d.mean) <= 4.0 * d.se ? "pass" : "fail";
  }
  return d;
}

int cmd_diagnose(const DiagnoseOptions& o, std::ostream& out) {
  RunRecorder rec("diagnose", o.out_dir);
  rec.input(o.trace);
  const LoadedTrace loaded = read_trace_csv(o.trace);
  const Trace& tr = loaded.trace;

  {
    std::ostringstream os;
    csv::Writer w(os);
    w.field("parameter").field("mean").field("sd").field("lag1_autocorr").end_row();
    auto row = [&](const std::string& name, const Vector& x) {
      const SeriesSummary s = summarize(x);
      w.field(name).field(s.mean).field(s.sd).field(s.lag1).end_row();
    };
    for (Index j = 0; j < tr.p(); ++j) row("beta_" + std::to_string(j + 1), tr.beta.col(j));
    for (Index j = 0; j < tr.p(); ++j) row("betak_" + std::to_string(j + 1), tr.betak.col(j));
    if (loaded.sigma2) row("sigma2", *loaded.sigma2);
    if (tr.delta.size() > 0) row("delta", tr.delta);
    rec.output("summary.csv", os.str());
  }

  DeltaCheck check;
  if (tr.delta.size() > 0) {
    std::ostringstream os;
    csv::Writer w(os);
    w.field("iter").field("delta").field("running_mean").end_row();
    double sum = 0.0;
    for (Index t = 0; t < tr.delta.size(); ++t) {
      sum += tr.delta(t);
      w.field(loaded.iterations[static_cast<std::size_t>(t)]).field(tr.delta(t));
      w.field(sum / static_cast<double>(t + 1)).end_row();
    }
    rec.output("diagnostics.csv", os.str());
    check = check_delta(tr.delta);
  } else {
    check.status = "absent";
  }
  {
    std::ostringstream os;
    csv::Writer w(os);
    w.field("draws").field("mean").field("sd").field("se").field("batches").field("status").end_row();
    w.field(static_cast<long>(tr.delta.size())).field(check.mean).field(check.sd).field(check.se);
    w.field(check.batches).field(check.status).end_row();
    rec.output("delta_check.csv", os.str());
  }

  RunManifest& m = rec.manifest();
  m.argv = {absolute_string(o.trace)};
  m.config = {{"trace", absolute_string(o.trace)}, {"draws", tr.draws()}, {"p", tr.p()}};
  rec.finish();

  out << "diagnose: delta mean=" << num(check.mean) << " se=" << num(check.se)
      << " status=" << check.status << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  long n = 500;
  long p = 30;
  int sweeps = 100;
  int repeats = 20;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

void add_bench_options(CLI::App& sub, BenchOptions& o) {
  sub.add_option("--n", o.n, "rows");
  sub.add_option("--p", o.p, "features");
  sub.add_option("--sweeps", o.sweeps, "Gibbs sweeps per ISA");
  sub.add_option("--repeats", o.repeats, "kernel repetitions");
  sub.add_option("--seed", o.seed);
  sub.add_option("--out-dir", o.out_dir);
}

int cmd_bench(const BenchOptions& o, std::ostream& out) {
  if (o.n < 2) bad_flag("--n must be >= 2");
  if (o.p < 1) bad_flag("--p must be >= 1");
  if (o.sweeps < 1) bad_flag("--sweeps must be >= 1");
  if (o.repeats < 1) bad_flag("--repeats must be >= 1");
  if (2 * o.p >= o.n) bad_flag("--n must exceed 2 * --p for the flat-prior chain");

  RunRecorder rec("bench", o.out_dir);
  const auto n = static_cast<std::size_t>(o.n);
  const auto p = static_cast<std::size_t>(o.p);
  RngStream rng(o.seed, 0);
  std::vector<double> a(n * p), b(n * p), m(p * p), v(n * p);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = rng.normal();
  for (auto& x : m) x = rng.normal();

  std::vector<kernels::Isa> isas = {kernels::Isa::Scalar};
  if (kernels::isa_supported(kernels::Isa::Avx2)) isas.push_back(kernels::Isa::Avx2);

  struct Row {
    std::string isa, kernel;
    double checksum, max_abs_diff, seconds;
  };
  std::vector<Row> rows;
  std::map<std::string, std::vector<double>> reference;

  auto time_it = [&](const std::function<void()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < o.repeats; ++r) f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / o.repeats;
  };
  auto record = [&](const std::string& isa, const std::string& kernel, const std::vector<double>& res,
                    double secs) {
    double sum = 0.0;
    for (const double x : res) sum += x;
    double diff = 0.0;
    auto& ref = reference[kernel];
    if (ref.empty()) ref = res;
    for (std::size_t i = 0; i < res.size(); ++i) diff = std::max(diff, std::abs(res[i] - ref[i]));
    rows.push_back({isa, kernel, sum, diff, secs});
  };

  for (const auto isa : isas) {
    const kernels::KernelTable& k = kernels::table_for(isa);
    const std::string name(kernels::to_string(isa));
    std::vector<double> res(1);
    double secs = time_it([&] { res[0] = k.dot(a.data(), b.data(), n * p); });
    record(name, "dot", res, secs);

    std::vector<double> y;
    secs = time_it([&] {
      y = b;
      k.axpy(0.5, a.data(), y.data(), n * p);
    });
    record(name, "axpy", y, secs);

    std::vector<double> g(p * p);
    secs = time_it([&] {
      std::fill(g.begin(), g.end(), 0.0);
      k.cross_accumulate(a.data(), p, b.data(), p, n, p, p, g.data());
    });
    record(name, "cross_accumulate", g, secs);

    secs = time_it([&] { k.rows_times(m.data(), p, p, a.data(), p, n, v.data(), p, false); });
    record(name, "rows_times", v, secs);

    secs = time_it([&] { res[0] = k.offdiag_cross_sum(a.data(), p, b.data(), p, n, p); });
    record(name, "offdiag_cross_sum", res, secs);
  }

  ExperimentSpec spec;
  spec.n = o.n;
  spec.p = o.p;
  spec.v = std::min<Index>(10, o.p);
  RngStream data_rng(o.seed, 1);
  const SyntheticData syn = generate_dataset(spec, data_rng);
  const MomentEstimate moments{Vector::Zero(spec.p), syn.sigma, 0.0, spec.n};
  const KnockoffJointModel model = build_joint_model(moments, construct_s_equicorrelated(syn.sigma));
  ChainConfig config;
  config.burn_in = 0;
  config.samples = o.sweeps;
  config.seed = o.seed;
  config.stream = 2;
  const kernels::Isa original = kernels::active().isa;
  for (const auto isa : isas) {
    kernels::select_isa(isa);
    LinearTrace tr;
    const auto t0 = std::chrono::steady_clock::now();
    tr = run_chain_linear(syn.data, model, FlatPrior{}, config);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<double> res(tr.beta.data(), tr.beta.data() + tr.beta.size());
    record(std::string(kernels::to_string(isa)), "gibbs_sweep", res, secs / o.sweeps);
  }
  kernels::select_isa(original);

  std::ostringstream os;
  csv::Writer w(os);
  w.field("isa").field("kernel").field("checksum").field("max_abs_diff_vs_scalar").end_row();
  out << std::left << std::setw(8) << "isa" << std::setw(20) << "kernel" << std::right << std::setw(14)
      << "seconds" << std::setw(14) << "max_diff" << "\n";
  for (const auto& r : rows) {
    w.field(r.isa).field(r.kernel).field(r.checksum).field(r.max_abs_diff).end_row();
    out << std::left << std::setw(8) << r.isa << std::setw(20) << r.kernel << std::right
        << std::setw(14) << std::setprecision(4) << std::scientific << r.seconds << std::setw(14)
        << r.max_abs_diff << std::defaultfloat << "\n";
  }
  rec.output("bench.csv", os.str());

  RunManifest& man = rec.manifest();
  man.argv = {"--n", std::to_string(o.n), "--p", std::to_string(o.p), "--sweeps",
              std::to_string(o.sweeps), "--repeats", std::to_string(o.repeats), "--seed",
              std::to_string(o.seed)};
  man.seed = o.seed;
  man.config = {{"n", o.n}, {"p", o.p}, {"sweeps", o.sweeps}, {"repeats", o.repeats}};
  rec.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// replay

struct ReplayOptions {
  std::string manifest;
  std::string out_dir;
  bool check = false;
};

void add_replay_options(CLI::App& sub, ReplayOptions& o) {
  sub.add_option("manifest", o.manifest, "manifest.json from an earlier run")->required();
  sub.add_option("--out-dir", o.out_dir, "default: the manifest's directory");
  sub.add_flag("--check", o.check, "compare regenerated outputs with the recorded digests");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  const RunManifest m = read_manifest(o.manifest);
  if (m.command == "replay") bad_flag(o.manifest + ": cannot replay a replay");
  for (const auto& in : m.inputs) {
    if (!fs::exists(in.path)) throw Error(ErrorCode::FileNotFound, "recorded input '" + in.path + "' is missing");
    if (sha256_file(in.path) != in.sha256) {
      throw Error(ErrorCode::ParseError, "recorded input '" + in.path + "' has changed since the run");
    }
  }
  const std::string dir =
      o.out_dir.empty() ? fs::absolute(fs::path(o.manifest)).parent_path().string() : o.out_dir;
  std::vector<std::string> args;
  if (!m.isa.empty()) {
    if (const auto isa = m.isa == "avx2" ? kernels::Isa::Avx2 : kernels::Isa::Scalar;
        kernels::isa_supported(isa)) {
      args = {"--isa", m.isa};
    } else {
      err << "warning: recorded ISA '" << m.isa << "' unavailable; outputs may differ in the last bits\n";
    }
  }
  args.push_back(m.command);
  args.insert(args.end(), m.argv.begin(), m.argv.end());
  args.push_back("--out-dir");
  args.push_back(dir);
  const int code = dispatch(args, out, err);
  if (code != kExitOk || !o.check) return code;

  int mismatches = 0;
  for (const auto& f : m.outputs) {
    const fs::path path = fs::path(dir) / f.path;
    const bool same = fs::exists(path) && sha256_file(path) == f.sha256;
    if (!same) ++mismatches;
    out << (same ? "identical " : "DIFFERENT ") << f.path << "\n";
  }
  if (mismatches > 0) {
    throw Error(ErrorCode::ParseError, std::to_string(mismatches) + " output(s) differ from the manifest");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian knockoff filter", "bkf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BKF_VERSION);
  std::string isa;
  app.add_option("--isa", isa, "kernel ISA: scalar | avx2 (default: best available)");

  FitOptions fit;
  SelectOptions sel;
  SimulateOptions sim;
  DiagnoseOptions diag;
  BenchOptions bench;
  ReplayOptions replay;
  auto* fit_cmd = app.add_subcommand("fit", "run the knockoff Gibbs sampler on a dataset CSV");
  add_fit_options(*fit_cmd, fit);
  auto* sel_cmd = app.add_subcommand("select", "BFDR-controlled selection from a trace");
  add_select_options(*sel_cmd, sel);
  auto* sim_cmd = app.add_subcommand("simulate", "run a synthetic experiment grid");
  add_simulate_options(*sim_cmd, sim);
  auto* diag_cmd = app.add_subcommand("diagnose", "trace summaries and the delta check");
  add_diagnose_options(*diag_cmd, diag);
  auto* bench_cmd = app.add_subcommand("bench", "kernel and sweep timings per ISA");
  add_bench_options(*bench_cmd, bench);
  auto* replay_cmd = app.add_subcommand("replay", "re-run a command from its manifest");
  add_replay_options(*replay_cmd, replay);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << BKF_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (!isa.empty()) {
    if (isa == "scalar") kernels::select_isa(kernels::Isa::Scalar);
    else if (isa == "avx2") kernels::select_isa(kernels::Isa::Avx2);
    else bad_flag("--isa must be 'scalar' or 'avx2', got '" + isa + "'");
  }
  if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
  if (sel_cmd->parsed()) return cmd_select(sel, out);
  if (sim_cmd->parsed()) return cmd_simulate(sim, out, err);
  if (diag_cmd->parsed()) return cmd_diagnose(diag, out);
  if (bench_cmd->parsed()) return cmd_bench(bench, out);
  return cmd_replay(replay, out, err);
}

int exit_code_for(ErrorCode code) {
  switch (category_of(code)) {
    case ErrorCategory::Usage: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const kernels::Isa before = kernels::active().isa;
  int code = kExitOk;
  try {
    code = dispatch(args, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    code = kExitData;
  }
  kernels::select_isa(before);
  return code;
}

}  // namespace bkf::cli
