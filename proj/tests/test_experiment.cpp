#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "zoconex/experiment.hpp"

using namespace zoconex;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zoconex_test_" + name);
  fs::remove_all(p);
  return p;
}

TraceRow row(int trial, std::uint64_t q, double gap, double viol = 0.0, int diverged = 0) {
  return {trial, q, gap, viol, 0.0, diverged};
}

ExperimentConfig small_convex(const fs::path& out) {
  ExperimentConfig c = default_config("qcqp-convex");
  c.n = 5;
  c.m = 2;
  c.T = 300;
  c.trials = 2;
  c.output = out.string();
  return c;
}

}  // namespace

TEST_CASE("checkpoint grid") {
  for (auto [total, count] : {std::pair{1000, 50}, std::pair{10, 50}, std::pair{60, 50},
                              std::pair{50, 50}, std::pair{7, 1}, std::pair{100000, 50}}) {
    const std::vector<int> g = checkpoint_grid(total, count);
    CHECK(g.size() == static_cast<std::size_t>(std::min(total, count)));
    CHECK(g.back() == total);
    CHECK(g.front() >= 1);
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] > g[k - 1]);
  }
  const std::vector<int> g = checkpoint_grid(10000, 5);
  CHECK(g == std::vector<int>{1, 10, 100, 1000, 10000});
  CHECK_THROWS_AS(checkpoint_grid(0, 5), ConfigError);
}

TEST_CASE("summary statistics") {
  const std::vector<SummaryRow> one = summarize({{row(0, 10, 4.0, 1.0), row(0, 20, 2.0, 0.5)}});
  REQUIRE(one.size() == 2);
  CHECK(one[0].checkpoint_queries == 10);
  CHECK(one[0].mean_gap == 4.0);
  CHECK(one[0].stderr_gap == 0.0);
  CHECK(one[1].mean_violation == 0.5);
  CHECK(one[1].n_trials == 1);

  const std::vector<SummaryRow> two = summarize({{row(0, 10, 1.0)}, {row(1, 10, 3.0)}});
  CHECK(two[0].mean_gap == doctest::Approx(2.0));
  CHECK(two[0].stderr_gap == doctest::Approx(1.0));
  CHECK(two[0].n_trials == 2);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<SummaryRow> three =
      summarize({{row(0, 10, 1.0)}, {row(1, 10, nan, nan, 1)}, {row(2, 10, 3.0)}});
  CHECK(three[0].mean_gap == doctest::Approx(2.0));
  CHECK(three[0].n_trials == 2);
  CHECK(three[0].n_diverged == 1);

  CHECK_THROWS_AS(summarize({}), ConfigError);
}

TEST_CASE("CSV round trip") {
  const std::vector<TraceRow> rows = {row(0, 28, 0.1 + 0.2, 1.0 / 3.0), row(3, 123456789012ULL, -1e-300, 0.0),
                                      {1, 5, std::nan(""), std::nan(""), std::nan(""), 1}};
  std::stringstream ss;
  write_trace_csv(ss, rows);
  CHECK(ss.str().rfind("trial,checkpoint_queries,gap,violation,dual_norm,diverged\n", 0) == 0);
  const std::vector<TraceRow> back = read_trace_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(back[k].trial == rows[k].trial);
    CHECK(back[k].checkpoint_queries == rows[k].checkpoint_queries);
    CHECK(back[k].gap == rows[k].gap);
    CHECK(back[k].violation == rows[k].violation);
    CHECK(back[k].dual_norm == rows[k].dual_norm);
    CHECK(back[k].diverged == rows[k].diverged);
  }
  CHECK(std::isnan(back[2].gap));

  const std::vector<SummaryRow> summary = summarize({{row(0, 10, 1.0 / 7.0)}, {row(1, 10, 2.0 / 3.0)}});
  std::stringstream s2;
  write_summary_csv(s2, summary);
  CHECK(s2.str().rfind(
            "checkpoint_queries,mean_gap,stderr_gap,mean_violation,stderr_violation,n_trials,n_diverged\n",
            0) == 0);
  const std::vector<SummaryRow> sback = read_summary_csv(s2);
  REQUIRE(sback.size() == 1);
  CHECK(sback[0].mean_gap == summary[0].mean_gap);
  CHECK(sback[0].stderr_gap == summary[0].stderr_gap);

  std::stringstream bad("gap,trial\n1,2\n");
  CHECK_THROWS_AS(read_trace_csv(bad), ConfigError);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(
      "name: demo\n"
      "problem:\n"
      "  family: qcqp-nonconvex\n"
      "  n: 4\n"
      "  m: 2\n"
      "iterations:\n"
      "  T: 50\n"
      "  K: 3\n"
      "trials: 2\n"
      "noise:\n"
      "  kind: student_t\n"
      "  scale: 0.5\n"
      "  dof: 5\n"
      "smoothing:\n"
      "  radii: [0.05, 0.1]\n"
      "schedule:\n"
      "  mode: explicit\n"
      "  eta: 3\n"
      "  tau: 2\n"
      "seed: 18446744073709551615\n");
  CHECK(c.name == "demo");
  CHECK(c.family == ProblemFamily::kQcqpNonconvex);
  CHECK(c.n == 4);
  CHECK(c.K == 3);
  CHECK(c.noise.kind == NoiseKind::kStudentT);
  CHECK(c.noise.dof == 5.0);
  CHECK(c.radii == std::vector<double>{0.05, 0.1});
  CHECK(c.schedule.mode == ScheduleMode::kExplicit);
  CHECK(c.seed == 18446744073709551615ULL);
  CHECK(parse_config("smoothing:\n  mode: theorem1\n").smoothing_theorem1);

  // Resolved echo parses back to the same echo.
  const std::string echo = echo_config(c);
  CHECK(echo_config(parse_config(echo)) == echo);
  for (const char* name : {"qcqp-convex", "qcqp-nonconvex", "smoothing-sweep"}) {
    const std::string d = echo_config(default_config(name));
    CHECK(echo_config(parse_config(d)) == d);
  }
  CHECK_THROWS_AS(default_config("nope"), ConfigError);
}

TEST_CASE("config errors name the line") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, "cfg.yaml");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("name: a\ntrials: 0\n").find("cfg.yaml:2:") == 0);
  CHECK(message("name: a\nproblem:\n  n: 3\n  m: -1\n").find("cfg.yaml:4:") == 0);
  CHECK(message("name: a\nproblem:\n  famly: qcqp-convex\n").find("cfg.yaml:3:") == 0);
  CHECK(message("iterations:\n  T: abc\n").find("cfg.yaml:2:") == 0);
  CHECK(message("smoothing:\n  radii: [0.1, -2]\n").find("cfg.yaml:2:") == 0);
  CHECK(message("noise:\n  kind: cauchy\n").find("cfg.yaml:2:") == 0);
  CHECK(message("schedule:\n  mode: sqrt_t\n  tau: 0\n").find("cfg.yaml:3:") == 0);
  CHECK(message("a: [1, 2\n").find("cfg.yaml:") == 0);
}

TEST_CASE("seed overrides") {
  ExperimentConfig c;
  c.seed = 4;
  apply_seed_override(c, nullptr, std::nullopt);
  CHECK(c.seed == 4);
  apply_seed_override(c, "17", std::nullopt);
  CHECK(c.seed == 17);
  apply_seed_override(c, "17", 99);
  CHECK(c.seed == 99);
  CHECK_THROWS_AS(apply_seed_override(c, "12x", std::nullopt), ConfigError);
}

TEST_CASE("experiment output is deterministic") {
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  ExperimentConfig ca = small_convex(a);
  ExperimentConfig cb = small_convex(b);
  const ExperimentReport ra = run_experiment(ca, 2);
  const ExperimentReport rb = run_experiment(cb, 1);
  CHECK(ra.exit_code == 0);
  CHECK(ra.files.size() == 3);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));

  // The resolved config re-runs identically.
  const fs::path c = scratch_dir("det_c");
  ExperimentConfig cc = load_config((a / "config.resolved.yaml").string());
  cc.output = c.string();
  run_experiment(cc, 3);
  CHECK(slurp(a / "trace.csv") == slurp(c / "trace.csv"));

  ca.seed = 2;
  const fs::path d = scratch_dir("det_d");
  ca.output = d.string();
  run_experiment(ca, 2);
  CHECK(slurp(a / "trace.csv") != slurp(d / "trace.csv"));
  for (const fs::path& p : {a, b, c, d}) fs::remove_all(p);
}

TEST_CASE("trace has one row per checkpoint") {
  const fs::path out = scratch_dir("rows");
  ExperimentConfig c = small_convex(out);
  c.trials = 1;
  c.T = 10;
  run_experiment(c, 1);
  std::ifstream in(out / "trace.csv");
  const std::vector<TraceRow> rows = read_trace_csv(in);
  CHECK(rows.size() == 10);
  std::ifstream sin(out / "summary.csv");
  const std::vector<SummaryRow> summary = read_summary_csv(sin);
  CHECK(summary.size() == 10);
  for (std::size_t k = 1; k < summary.size(); ++k) {
    CHECK(summary[k].checkpoint_queries > summary[k - 1].checkpoint_queries);
  }
  CHECK(summary.back().checkpoint_queries == ledger_expected_calls(2, 10));

  c.T = 400;
  c.checkpoints = 25;
  run_experiment(c, 1);
  std::ifstream in2(out / "trace.csv");
  CHECK(read_trace_csv(in2).size() == 25);
  fs::remove_all(out);
}

TEST_CASE("smoothing sweep writes one file pair per radius") {
  const fs::path out = scratch_dir("sweep");
  ExperimentConfig c = default_config("smoothing-sweep");
  c.n = 8;
  c.m = 2;
  c.T = 2000;
  c.trials = 4;
  c.output = out.string();
  const ExperimentReport r = run_experiment(c, 4);
  CHECK(r.files.size() == 7);
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(out)) names.insert(e.path().filename().string());
  for (const char* f : {"summary_nu0.05.csv", "summary_nu0.1.csv", "summary_nu2.csv", "trace_nu0.05.csv",
                        "trace_nu0.1.csv", "trace_nu2.csv", "config.resolved.yaml"}) {
    CHECK(names.count(f) == 1);
  }
  std::ifstream small(out / "summary_nu0.05.csv");
  std::ifstream large(out / "summary_nu2.csv");
  const SummaryRow s = read_summary_csv(small).back();
  const SummaryRow l = read_summary_csv(large).back();
  CHECK((l.n_diverged > 0 || std::abs(l.mean_gap) >= 5.0 * std::abs(s.mean_gap)));
  fs::remove_all(out);
}

TEST_CASE("nonconvex experiment rows") {
  const fs::path out = scratch_dir("nonconvex");
  ExperimentConfig c = default_config("qcqp-nonconvex");
  c.n = 4;
  c.T = 100;
  c.K = 5;
  c.trials = 2;
  c.output = out.string();
  run_experiment(c, 2);
  std::ifstream in(out / "trace.csv");
  const std::vector<TraceRow> rows = read_trace_csv(in);
  CHECK(rows.size() == 10);
  for (const TraceRow& r : rows) {
    CHECK(std::isfinite(r.gap));
    CHECK(r.gap >= 0.0);
  }
  fs::remove_all(out);
}

TEST_CASE("unwritable output") {
  ExperimentConfig c = small_convex("/proc/zoconex_cannot_write_here");
  CHECK_THROWS_AS(run_experiment(c, 1), Error);
}
