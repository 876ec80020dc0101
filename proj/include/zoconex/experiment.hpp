#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zoconex/conex.hpp"
#include "zoconex/problem.hpp"

namespace zoconex {

enum class ProblemFamily { kQcqpConvex, kQcqpNonconvex, kCustom1d };

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemFamily family = ProblemFamily::kQcqpConvex;
  int n = 10;
  int m = 1;
  bool shared_instance = false;   // one instance for every trial
  std::uint64_t instance_seed = 0;
  int T = 1000;                   // iterations (inner iterations for the nonconvex family)
  int K = 1;                      // outer iterations, nonconvex family only
  int trials = 1;
  NoiseModel noise;
  bool smoothing_theorem1 = false;
  std::vector<double> radii = {0.05};  // several entries = one sweep file pair per radius
  ScheduleSpec schedule;
  double mu_scale = 1.0;          // proximal weights mu_i = max(mu_scale * L_i, kMuFloor)
  int checkpoints = 50;
  double divergence_threshold = 1e12;
  std::uint64_t seed = 1;
  std::string output = "out";

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
};

/// Parses the YAML config. Errors carry the source name and line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Resolved config with every default spelled out; parse_config round-trips it.
std::string echo_config(const ExperimentConfig& config);

/// Default config of a named experiment: qcqp-convex, qcqp-nonconvex, smoothing-sweep.
ExperimentConfig default_config(const std::string& name);

/// --seed beats ZOCONEX_SEED beats the file.
void apply_seed_override(ExperimentConfig& config, const char* env_value,
                         std::optional<std::uint64_t> cli_seed);

/// Exactly min(count, total) distinct, geometrically spaced integers in
/// [1, total], ending at total.
std::vector<int> checkpoint_grid(int total, int count);

struct TraceRow {
  int trial = 0;
  std::uint64_t checkpoint_queries = 0;
  double gap = 0.0;        // f_0 - f_0* (stationarity residual for the nonconvex family)
  double violation = 0.0;
  double dual_norm = 0.0;
  int diverged = 0;
};

struct SummaryRow {
  std::uint64_t checkpoint_queries = 0;
  double mean_gap = 0.0;
  double stderr_gap = 0.0;
  double mean_violation = 0.0;
  double stderr_violation = 0.0;
  int n_trials = 0;    // trials contributing to the means
  int n_diverged = 0;
};

/// Per-checkpoint means and standard errors (sample std / sqrt(count), 0 for a
/// single trial). Diverged or non-finite rows are counted, not averaged.
std::vector<SummaryRow> summarize(const std::vector<std::vector<TraceRow>>& traces);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

struct TrialOutcome {
  std::vector<TraceRow> rows;
  bool reference_solved = true;
  double reference_value = 0.0;   // f_0* (convex families)
  bool diverged = false;
};

/// One trial of one smoothing radius.
TrialOutcome run_trial(const ExperimentConfig& config, int trial, double radius);

struct ExperimentReport {
  std::vector<std::string> files;
  int unsolved_references = 0;
  int exit_code = 0;  // 0 ok, 3 when some reference solve failed
};

/// Runs every trial for every radius on up to `jobs` threads and writes trace,
/// summary and resolved-config files under config.output.
ExperimentReport run_experiment(const ExperimentConfig& config, int jobs = 1);

std::string family_name(ProblemFamily family);

}  // namespace zoconex
