#include <doctest.h>

#include "../tools/commands.hpp"
#include "../tools/manifest.hpp"
#include "bkf/csv.hpp"
#include "bkf/knockoff_model.hpp"
#include "bkf/rng.hpp"
#include "test_support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bkf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(BKF_TEST_TMP) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome bkf_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// n rows, p features x1..xp, linear response y and binary response z.
fs::path write_dataset(const fs::path& dir, Index n, Index p, std::uint64_t seed) {
  RngStream rng(seed);
  std::ostringstream os;
  for (Index j = 0; j < p; ++j) os << "x" << j + 1 << ",";
  os << "y,z\n";
  for (Index i = 0; i < n; ++i) {
    double eta = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double v = rng.normal();
      if (j < 2) eta += (j == 0 ? 2.0 : -1.5) * v;
      os << csv::format(v) << ",";
    }
    os << csv::format(eta + rng.normal()) << "," << (eta + rng.normal() > 0.0 ? 1 : 0) << "\n";
  }
  const fs::path path = dir / "data.csv";
  spit(path, os.str());
  return path;
}

std::string manifest_of(const fs::path& dir) { return (dir / "manifest.json").string(); }

void check_replay(const fs::path& dir) {
  const Outcome r = bkf_run({"replay", manifest_of(dir), "--check"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("DIFFERENT") == std::string::npos);
  CHECK(r.out.find("identical") != std::string::npos);
}

}  // namespace

TEST_CASE("fit, select and diagnose pipeline") {
  const fs::path dir = scratch("pipeline");
  const fs::path data = write_dataset(dir, 150, 6, 1);
  const fs::path fit = dir / "fit";
  Outcome r = bkf_run({"fit", data.string(), "--burn-in", "100", "--samples", "400", "--seed", "3",
                       "--snapshot-every", "100", "--out-dir", fit.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"trace.csv", "delta.csv", "features.csv", "knockoffs.csv", "manifest.json"})
    CHECK(fs::exists(fit / f));
  const csv::Table trace = csv::read(fit / "trace.csv");
  CHECK(trace.rows.size() == 400);
  CHECK(trace.column("sigma2") >= 0);
  CHECK(trace.column("beta_6") >= 0);

  const cli::RunManifest m = cli::read_manifest(fit / "manifest.json");
  CHECK(m.command == "fit");
  CHECK(m.seed == 3u);
  REQUIRE(m.inputs.size() == 1);
  CHECK(m.inputs[0].sha256 == cli::sha256_file(data));
  CHECK(m.outputs.size() == 4);
  CHECK_FALSE(m.started.empty());

  const fs::path sel = dir / "sel";
  r = bkf_run({"select", (fit / "trace.csv").string(), "--alpha", "0.1", "--out-dir", sel.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const csv::Table table = csv::read(sel / "selection.csv");
  REQUIRE(table.rows.size() == 7);
  const long name = table.column("name"), selected = table.column("selected"), p_hat = table.column("p_hat");
  REQUIRE(name >= 0);
  REQUIRE(selected >= 0);
  REQUIRE(p_hat >= 0);
  for (const char* col : {"beta_mean", "beta_sd", "betak_mean", "betak_sd", "rank", "prefix_bfdr"})
    CHECK(table.column(col) >= 0);
  CHECK(table.rows[0][name] == "x1");
  CHECK(table.rows[0][selected] == "1");
  CHECK(table.rows[1][selected] == "1");
  double sum = 0.0;
  int k = 0;
  for (const auto& row : table.rows)
    if (row[selected] == "1") {
      sum += std::stod(row[p_hat]);
      ++k;
    }
  CHECK(sum / k <= 0.1);

  const fs::path diag = dir / "diag";
  r = bkf_run({"diagnose", (fit / "trace.csv").string(), "--out-dir", diag.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const csv::Table summary = csv::read(diag / "summary.csv");
  CHECK(summary.rows.size() == 16);
  CHECK(csv::read(diag / "diagnostics.csv").rows.size() == 400);
  CHECK(csv::read(diag / "delta_check.csv").rows.size() == 1);

  check_replay(fit);
  check_replay(sel);
  check_replay(diag);
}

TEST_CASE("probit fit with latents") {
  const fs::path dir = scratch("probit");
  const fs::path data = write_dataset(dir, 200, 4, 2);
  const fs::path fit = dir / "fit";
  const Outcome r = bkf_run({"fit", data.string(), "--response", "z", "--model", "probit", "--burn-in", "50",
                             "--samples", "200", "--snapshot-every", "50", "--export-latents", "--out-dir",
                             fit.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(fit / "latents.csv"));
  CHECK(csv::read(fit / "trace.csv").column("sigma2") < 0);
  check_replay(fit);
}

TEST_CASE("fit error paths") {
  const fs::path dir = scratch("fit_errors");
  const fs::path data = write_dataset(dir, 30, 3, 3);
  Outcome r = bkf_run({"fit", data.string(), "--response", "nope", "--out-dir", (dir / "o").string()});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("nope") != std::string::npos);
  r = bkf_run({"fit", data.string(), "--samples", "0", "--out-dir", (dir / "o").string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("--samples") != std::string::npos);
  r = bkf_run({"fit", (dir / "missing.csv").string(), "--out-dir", (dir / "o").string()});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("missing.csv") != std::string::npos);
  r = bkf_run({"fit", data.string(), "--model", "logit"});
  CHECK(r.code == cli::kExitUsage);
  r = bkf_run({"fit", data.string(), "--response", "y", "--model", "probit", "--out-dir", (dir / "o").string()});
  CHECK(r.code == cli::kExitData);

  spit(dir / "bad.csv", "x1,y\n1,2\nabc,3\n");
  r = bkf_run({"fit", (dir / "bad.csv").string(), "--out-dir", (dir / "o").string()});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("bad.csv:3") != std::string::npos);

  // flat prior needs n > 2p
  const fs::path tiny = scratch("fit_tiny");
  const fs::path small = write_dataset(tiny, 8, 4, 4);
  r = bkf_run({"fit", small.string(), "--samples", "5", "--out-dir", (tiny / "o").string()});
  CHECK(r.code == cli::kExitNumerical);
  r = bkf_run({"bogus"});
  CHECK(r.code == cli::kExitUsage);
}

TEST_CASE("select edge cases") {
  const fs::path dir = scratch("select");
  const fs::path data = write_dataset(dir, 60, 3, 5);
  REQUIRE(bkf_run({"fit", data.string(), "--burn-in", "0", "--samples", "1", "--out-dir", (dir / "fit").string()})
              .code == 0);
  const std::string trace = (dir / "fit" / "trace.csv").string();
  Outcome r = bkf_run({"select", trace, "--alpha", "1.0", "--out-dir", (dir / "s").string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("alpha") != std::string::npos);
  r = bkf_run({"select", trace, "--alpha", "0.2", "--out-dir", (dir / "s").string()});
  REQUIRE(r.code == 0);
  const csv::Table t = csv::read(dir / "s" / "selection.csv");
  for (const auto& row : t.rows) {
    const double ph = std::stod(row[t.column("p_hat")]);
    CHECK((ph == 0.0 || ph == 1.0));
  }
  r = bkf_run({"select", trace, "--statistic", "signed-sum", "--tie-rule", "strict-negative", "--out-dir",
               (dir / "s2").string()});
  CHECK(r.code == 0);
  r = bkf_run({"select", (dir / "none.csv").string()});
  CHECK(r.code == cli::kExitData);
  spit(dir / "junk.csv", "iter,beta_1\n1\n");
  r = bkf_run({"select", (dir / "junk.csv").string(), "--out-dir", (dir / "s3").string()});
  CHECK(r.code == cli::kExitData);
}

TEST_CASE("diagnose flags corrupted knockoffs") {
  const fs::path dir = scratch("diagnose");
  RngStream rng(6);
  const Index n = 200, p = 4;
  Matrix x = test::random_matrix(n, p, rng);
  x.col(1) += 0.8 * x.col(0);
  x.col(3) += 0.8 * x.col(2);
  x = standardize_columns(x);
  const double self = delta_statistic(x, x);
  const double zero = delta_statistic(x, Matrix::Zero(n, p));
  CHECK(self == 0.0);
  CHECK(zero < -1.0);

  auto write_trace = [&](const fs::path& path, double delta) {
    std::ostringstream os;
    os << "iter,beta_1,betak_1,delta\n";
    for (int t = 1; t <= 100; ++t) os << t << "," << csv::format(rng.normal()) << "," << csv::format(rng.normal()) << ","
                                      << csv::format(delta) << "\n";
    spit(path, os.str());
  };
  write_trace(dir / "self.csv", self);
  write_trace(dir / "zero.csv", zero);
  auto status = [&](const std::string& name) {
    const Outcome r = bkf_run({"diagnose", (dir / (name + ".csv")).string(), "--out-dir", (dir / name).string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const csv::Table t = csv::read(dir / name / "delta_check.csv");
    return t.rows.at(0).at(t.column("status"));
  };
  CHECK(status("self") == "degenerate");
  CHECK(status("zero") == "fail");

  spit(dir / "nodelta.csv", "iter,beta_1,betak_1\n1,0.5,0.1\n2,0.4,0.2\n");
  CHECK(status("nodelta") == "absent");
}

TEST_CASE("simulate writes per-point and aggregate CSVs") {
  const fs::path dir = scratch("simulate");
  spit(dir / "spec.txt",
       "# two grid points\nn = 100\np = 5\nv = 2\na = 0, 3\nburn_in = 50\nsamples = 200\nreplications = 2\nseed = 9\n");
  const fs::path out = dir / "out";
  Outcome r = bkf_run({"simulate", (dir / "spec.txt").string(), "--jobs", "2", "--out-dir", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(out / "replications_0001.csv"));
  CHECK(fs::exists(out / "replications_0002.csv"));
  const csv::Table agg = csv::read(out / "aggregate.csv");
  CHECK(agg.rows.size() == 2);
  for (const char* c : {"mean_fdr", "mean_power", "sd_power", "R"}) CHECK(agg.column(c) >= 0);
  const csv::Table reps = csv::read(out / "replications_0001.csv");
  for (const char* c : {"rep", "seed", "fdp", "power", "n_selected", "runtime_s"}) CHECK(reps.column(c) >= 0);
  check_replay(out);

  spit(dir / "bad.txt", "n = 100\nmystery = 1\n");
  r = bkf_run({"simulate", (dir / "bad.txt").string(), "--out-dir", (dir / "bad").string()});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("mystery") != std::string::npos);
  r = bkf_run({"simulate", "--out-dir", (dir / "bad").string()});
  CHECK(r.code == cli::kExitUsage);
}

TEST_CASE("bench output is deterministic") {
  const fs::path dir = scratch("bench");
  const Outcome r = bkf_run({"bench", "--n", "60", "--p", "8", "--sweeps", "3", "--repeats", "2", "--out-dir",
                             (dir / "b").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const csv::Table t = csv::read(dir / "b" / "bench.csv");
  CHECK_FALSE(t.rows.empty());
  const long diff = t.column("max_abs_diff_vs_scalar");
  REQUIRE(diff >= 0);
  for (const auto& row : t.rows) CHECK(std::stod(row[diff]) < 1e-8);
  check_replay(dir / "b");
}

TEST_CASE("replay detects tampering") {
  const fs::path dir = scratch("replay");
  const fs::path data = write_dataset(dir, 80, 3, 7);
  const fs::path fit = dir / "fit";
  REQUIRE(bkf_run({"fit", data.string(), "--burn-in", "10", "--samples", "50", "--out-dir", fit.string()}).code == 0);

  // replay into a fresh directory reproduces the bytes
  const Outcome fresh = bkf_run({"replay", manifest_of(fit), "--check", "--out-dir", (dir / "again").string()});
  CHECK(fresh.code == 0);
  CHECK(slurp(fit / "trace.csv") == slurp(dir / "again" / "trace.csv"));

  // a changed manifest seed gives different outputs
  nlohmann::json j = nlohmann::json::parse(slurp(fit / "manifest.json"));
  for (std::size_t i = 0; i + 1 < j["argv"].size(); ++i)
    if (j["argv"][i] == "--seed") j["argv"][i + 1] = "999";
  spit(dir / "edited.json", j.dump(2));
  Outcome r = bkf_run({"replay", (dir / "edited.json").string(), "--check", "--out-dir", (dir / "edited").string()});
  CHECK(r.code == cli::kExitData);
  CHECK(r.out.find("DIFFERENT trace.csv") != std::string::npos);

  spit(data, slurp(data) + "1,2,3,4,1\n");
  r = bkf_run({"replay", manifest_of(fit), "--check"});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("changed") != std::string::npos);

  spit(dir / "broken.json", "{ not json");
  CHECK(bkf_run({"replay", (dir / "broken.json").string()}).code == cli::kExitData);
}
