#include "zoconex/experiment.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "zoconex/nonconvex.hpp"
#include "zoconex/qcqp.hpp"
#include "zoconex/rng.hpp"

namespace zoconex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string g17(double v) { return fmt::format("{:.17g}", v); }

// ---------------------------------------------------------------------------
// Config parsing.

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) throw ConfigError(source_ + ": " + what);
    throw ConfigError(fmt::format("{}:{}: {}", source_, mark.line + 1, what));
  }

  /// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& section) const {
    if (!map.IsMap()) fail(map, "section '" + section + "' must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  template <typename T>
  void read(const YAML::Node& map, const char* key, T& out) const {
    const YAML::Node node = map[key];
    if (!node) return;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, std::string("invalid value for '") + key + "'");
    }
  }

  /// Range check reported at the line of map[key].
  void require(const YAML::Node& map, const char* key, bool ok, const std::string& what) const {
    if (ok) return;
    const YAML::Node node = map[key];
    fail(node ? node : map, what);
  }

  void read_seed(const YAML::Node& map, const char* key, std::uint64_t& out) const {
    const YAML::Node node = map[key];
    if (!node) return;
    try {
      out = std::stoull(node.as<std::string>());
    } catch (const std::exception&) {
      fail(node, std::string("invalid unsigned 64-bit value for '") + key + "'");
    }
  }

 private:
  std::string source_;
};

ProblemFamily parse_family(const std::string& s, const ConfigReader& r, const YAML::Node& at) {
  if (s == "qcqp-convex") return ProblemFamily::kQcqpConvex;
  if (s == "qcqp-nonconvex") return ProblemFamily::kQcqpNonconvex;
  if (s == "custom-1d") return ProblemFamily::kCustom1d;
  r.fail(at, "unknown problem family '" + s + "'");
}

std::string noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::kNone: return "none";
    case NoiseKind::kGaussian: return "gaussian";
    case NoiseKind::kStudentT: return "student_t";
  }
  return "none";
}

std::string schedule_mode_name(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::kExplicit: return "explicit";
    case ScheduleMode::kTheorem1: return "theorem1";
    case ScheduleMode::kSqrtT: return "sqrt_t";
  }
  return "explicit";
}

// ---------------------------------------------------------------------------
// Trials.

QcqpInstance make_instance(const ExperimentConfig& cfg, int trial) {
  if (cfg.family == ProblemFamily::kCustom1d) return custom_1d_instance();
  const std::uint64_t seed = cfg.shared_instance
                                 ? cfg.instance_seed
                                 : derive_seed(cfg.seed, StreamRole::kInstance,
                                               static_cast<std::uint64_t>(trial));
  return generate_qcqp(cfg.n, cfg.m, cfg.family == ProblemFamily::kQcqpConvex, seed);
}

SmoothingConfig make_smoothing(const ExperimentConfig& cfg, const ProblemSpec& problem,
                               double radius) {
  if (cfg.smoothing_theorem1) {
    return select_smoothing_parameters(problem.constants(), problem.dimension(),
                                       problem.constraint_count(), cfg.T,
                                       problem.domain().max_norm());
  }
  return SmoothingConfig::uniform(radius, problem.constraint_count());
}

bool row_is_bad(const TraceRow& r) {
  return r.diverged != 0 || !std::isfinite(r.gap) || !std::isfinite(r.violation);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

std::string radius_tag(double r) { return fmt::format("{:g}", r); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw ConfigError("CSV: bad number '" + s + "'");
  return v;
}

void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ConfigError("CSV: expected header '" + header + "'");
  }
}

constexpr const char* kTraceHeader = "trial,checkpoint_queries,gap,violation,dual_norm,diverged";
constexpr const char* kSummaryHeader =
    "checkpoint_queries,mean_gap,stderr_gap,mean_violation,stderr_violation,n_trials,n_diverged";

}  // namespace

std::string family_name(ProblemFamily family) {
  switch (family) {
    case ProblemFamily::kQcqpConvex: return "qcqp-convex";
    case ProblemFamily::kQcqpNonconvex: return "qcqp-nonconvex";
    case ProblemFamily::kCustom1d: return "custom-1d";
  }
  return "qcqp-convex";
}

void ExperimentConfig::validate() const {
  if (family == ProblemFamily::kCustom1d && (n != 1 || m != 1)) {
    throw ConfigError("custom-1d requires n = 1 and m = 1");
  }
  if (n < 1 || m < 0) throw ConfigError("config requires n >= 1 and m >= 0");
  if (T < 1) throw ConfigError("config requires T >= 1");
  if (K < 1) throw ConfigError("config requires K >= 1");
  if (trials < 1) throw ConfigError("config requires trials >= 1");
  if (checkpoints < 1) throw ConfigError("config requires checkpoints >= 1");
  noise.validate();
  if (!smoothing_theorem1) {
    if (radii.empty()) throw ConfigError("explicit smoothing needs at least one radius");
    for (double r : radii) {
      if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("smoothing radii must be > 0");
    }
  }
  if (schedule.mode != ScheduleMode::kTheorem1 && !(schedule.tau > 0.0)) {
    throw ConfigError("schedule tau must be > 0");
  }
  if (!(mu_scale > 0.0)) throw ConfigError("proximal mu_scale must be > 0");
  if (!(divergence_threshold > 0.0)) throw ConfigError("divergence_threshold must be > 0");
  if (output.empty()) throw ConfigError("output path is empty");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ConfigReader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  ExperimentConfig cfg;
  if (!root || root.IsNull()) return cfg;
  r.check_keys(root,
               {"name", "problem", "iterations", "trials", "noise", "smoothing", "schedule",
                "proximal", "checkpoints", "divergence_threshold", "seed", "output"},
               "config");
  r.read(root, "name", cfg.name);
  r.read(root, "trials", cfg.trials);
  r.read(root, "checkpoints", cfg.checkpoints);
  r.read(root, "divergence_threshold", cfg.divergence_threshold);
  r.read_seed(root, "seed", cfg.seed);
  r.read(root, "output", cfg.output);
  r.require(root, "trials", cfg.trials >= 1, "trials must be >= 1");
  r.require(root, "checkpoints", cfg.checkpoints >= 1, "checkpoints must be >= 1");
  r.require(root, "divergence_threshold", cfg.divergence_threshold > 0.0,
            "divergence_threshold must be > 0");
  r.require(root, "output", !cfg.output.empty(), "output path is empty");

  if (const YAML::Node p = root["problem"]) {
    r.check_keys(p, {"family", "n", "m", "shared_instance", "instance_seed"}, "problem");
    std::string fam = family_name(cfg.family);
    r.read(p, "family", fam);
    cfg.family = parse_family(fam, r, p["family"] ? p["family"] : p);
    r.read(p, "n", cfg.n);
    r.read(p, "m", cfg.m);
    r.read(p, "shared_instance", cfg.shared_instance);
    r.read_seed(p, "instance_seed", cfg.instance_seed);
    r.require(p, "n", cfg.n >= 1, "n must be >= 1");
    r.require(p, "m", cfg.m >= 0, "m must be >= 0");
  }
  if (const YAML::Node it = root["iterations"]) {
    r.check_keys(it, {"T", "K"}, "iterations");
    r.read(it, "T", cfg.T);
    r.read(it, "K", cfg.K);
    r.require(it, "T", cfg.T >= 1, "T must be >= 1");
    r.require(it, "K", cfg.K >= 1, "K must be >= 1");
  }
  if (const YAML::Node nz = root["noise"]) {
    r.check_keys(nz, {"kind", "scale", "dof", "coupling"}, "noise");
    std::string kind = noise_kind_name(cfg.noise.kind);
    r.read(nz, "kind", kind);
    if (kind == "none") cfg.noise.kind = NoiseKind::kNone;
    else if (kind == "gaussian") cfg.noise.kind = NoiseKind::kGaussian;
    else if (kind == "student_t") cfg.noise.kind = NoiseKind::kStudentT;
    else r.fail(nz["kind"], "unknown noise kind '" + kind + "'");
    r.read(nz, "scale", cfg.noise.scale);
    r.read(nz, "dof", cfg.noise.dof);
    std::string coupling = "independent";
    r.read(nz, "coupling", coupling);
    if (coupling == "independent") cfg.noise.coupling = NoiseCoupling::kIndependent;
    else if (coupling == "common") cfg.noise.coupling = NoiseCoupling::kCommon;
    else r.fail(nz["coupling"], "unknown noise coupling '" + coupling + "'");
    r.require(nz, "scale", cfg.noise.scale >= 0.0, "noise scale must be >= 0");
    r.require(nz, "dof", cfg.noise.kind != NoiseKind::kStudentT || cfg.noise.dof > 2.0,
              "student_t noise needs dof > 2");
  }
  if (const YAML::Node sm = root["smoothing"]) {
    r.check_keys(sm, {"mode", "radii"}, "smoothing");
    std::string mode = "explicit";
    r.read(sm, "mode", mode);
    if (mode == "theorem1") cfg.smoothing_theorem1 = true;
    else if (mode == "explicit") cfg.smoothing_theorem1 = false;
    else r.fail(sm["mode"], "unknown smoothing mode '" + mode + "'");
    if (const YAML::Node radii = sm["radii"]) {
      if (radii.IsScalar()) {
        double v = 0.0;
        r.read(sm, "radii", v);
        cfg.radii = {v};
      } else {
        r.read(sm, "radii", cfg.radii);
      }
      bool positive = !cfg.radii.empty();
      for (double v : cfg.radii) positive = positive && v > 0.0 && std::isfinite(v);
      r.require(sm, "radii", positive, "smoothing radii must be a non-empty list of values > 0");
    }
  }
  if (const YAML::Node sc = root["schedule"]) {
    r.check_keys(sc, {"mode", "eta", "tau", "dual_norm_bound"}, "schedule");
    std::string mode = schedule_mode_name(cfg.schedule.mode);
    r.read(sc, "mode", mode);
    if (mode == "explicit") cfg.schedule.mode = ScheduleMode::kExplicit;
    else if (mode == "theorem1") cfg.schedule.mode = ScheduleMode::kTheorem1;
    else if (mode == "sqrt_t") cfg.schedule.mode = ScheduleMode::kSqrtT;
    else r.fail(sc["mode"], "unknown schedule mode '" + mode + "'");
    r.read(sc, "eta", cfg.schedule.eta);
    r.read(sc, "tau", cfg.schedule.tau);
    r.read(sc, "dual_norm_bound", cfg.schedule.dual_norm_bound);
    r.require(sc, "eta", cfg.schedule.eta >= 0.0, "schedule eta must be >= 0");
    r.require(sc, "tau", cfg.schedule.tau > 0.0, "schedule tau must be > 0");
  }
  if (const YAML::Node px = root["proximal"]) {
    r.check_keys(px, {"mu_scale"}, "proximal");
    r.read(px, "mu_scale", cfg.mu_scale);
    r.require(px, "mu_scale", cfg.mu_scale > 0.0, "proximal mu_scale must be > 0");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string echo_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "family" << YAML::Value << family_name(c.family);
  e << YAML::Key << "n" << YAML::Value << c.n;
  e << YAML::Key << "m" << YAML::Value << c.m;
  e << YAML::Key << "shared_instance" << YAML::Value << c.shared_instance;
  e << YAML::Key << "instance_seed" << YAML::Value << std::to_string(c.instance_seed);
  e << YAML::EndMap;
  e << YAML::Key << "iterations" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "T" << YAML::Value << c.T;
  e << YAML::Key << "K" << YAML::Value << c.K;
  e << YAML::EndMap;
  e << YAML::Key << "trials" << YAML::Value << c.trials;
  e << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << noise_kind_name(c.noise.kind);
  e << YAML::Key << "scale" << YAML::Value << g17(c.noise.scale);
  e << YAML::Key << "dof" << YAML::Value << g17(c.noise.dof);
  e << YAML::Key << "coupling" << YAML::Value
    << (c.noise.coupling == NoiseCoupling::kCommon ? "common" : "independent");
  e << YAML::EndMap;
  e << YAML::Key << "smoothing" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << (c.smoothing_theorem1 ? "theorem1" : "explicit");
  e << YAML::Key << "radii" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double r : c.radii) e << g17(r);
  e << YAML::EndSeq;
  e << YAML::EndMap;
  e << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << schedule_mode_name(c.schedule.mode);
  e << YAML::Key << "eta" << YAML::Value << g17(c.schedule.eta);
  e << YAML::Key << "tau" << YAML::Value << g17(c.schedule.tau);
  e << YAML::Key << "dual_norm_bound" << YAML::Value << g17(c.schedule.dual_norm_bound);
  e << YAML::EndMap;
  e << YAML::Key << "proximal" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mu_scale" << YAML::Value << g17(c.mu_scale);
  e << YAML::EndMap;
  e << YAML::Key << "checkpoints" << YAML::Value << c.checkpoints;
  e << YAML::Key << "divergence_threshold" << YAML::Value << g17(c.divergence_threshold);
  e << YAML::Key << "seed" << YAML::Value << std::to_string(c.seed);
  e << YAML::Key << "output" << YAML::Value << c.output;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

ExperimentConfig default_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.noise = NoiseModel::gaussian(0.1);
  c.radii = {0.05};
  c.schedule = {ScheduleMode::kSqrtT, 4.0, 4.0, 1.0};
  c.trials = 20;
  c.output = "out/" + name;
  if (name == "qcqp-convex") {
    c.family = ProblemFamily::kQcqpConvex;
    c.n = 20;
    c.m = 3;
    c.T = 20000;
  } else if (name == "qcqp-nonconvex") {
    c.family = ProblemFamily::kQcqpNonconvex;
    c.n = 10;
    c.m = 2;
    c.T = 2000;
    c.K = 20;
    c.mu_scale = 0.5;
    c.schedule = {ScheduleMode::kSqrtT, 40.0, 1.0, 1.0};
  } else if (name == "smoothing-sweep") {
    c.family = ProblemFamily::kQcqpConvex;
    c.n = 20;
    c.m = 3;
    c.T = 20000;
    c.shared_instance = true;
    c.instance_seed = 7;
    c.radii = {0.05, 0.1, 2.0};
  } else {
    throw ConfigError("unknown experiment '" + name +
                      "' (expected qcqp-convex, qcqp-nonconvex or smoothing-sweep)");
  }
  c.validate();
  return c;
}

void apply_seed_override(ExperimentConfig& config, const char* env_value,
                         std::optional<std::uint64_t> cli_seed) {
  if (cli_seed) {
    config.seed = *cli_seed;
    return;
  }
  if (env_value != nullptr && *env_value != '\0') {
    try {
      std::size_t pos = 0;
      const std::string s(env_value);
      config.seed = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError(std::string("ZOCONEX_SEED is not an unsigned integer: '") + env_value + "'");
    }
  }
}

std::vector<int> checkpoint_grid(int total, int count) {
  if (total < 1 || count < 1) throw ConfigError("checkpoint grid needs total, count >= 1");
  const int c = std::min(total, count);
  std::vector<int> grid;
  grid.reserve(static_cast<std::size_t>(c));
  if (c == 1) return {total};
  int prev = 0;
  for (int j = 0; j < c; ++j) {
    const double target = std::pow(static_cast<double>(total), static_cast<double>(j) / (c - 1));
    int v = static_cast<int>(std::lround(target));
    v = std::max(v, prev + 1);
    v = std::min(v, total - (c - 1 - j));
    grid.push_back(v);
    prev = v;
  }
  return grid;
}

std::vector<SummaryRow> summarize(const std::vector<std::vector<TraceRow>>& traces) {
  if (traces.empty()) throw ConfigError("summarize needs at least one trace");
  const std::size_t rows = traces.front().size();
  for (const auto& t : traces) {
    if (t.size() != rows) throw ConfigError("summarize: traces have different checkpoint counts");
  }
  std::vector<SummaryRow> out;
  for (std::size_t k = 0; k < rows; ++k) {
    SummaryRow s;
    s.checkpoint_queries = traces.front()[k].checkpoint_queries;
    std::vector<double> gaps;
    std::vector<double> viols;
    for (const auto& t : traces) {
      if (t[k].checkpoint_queries != s.checkpoint_queries) {
        throw ConfigError("summarize: traces disagree on checkpoint query counts");
      }
      if (row_is_bad(t[k])) {
        ++s.n_diverged;
        continue;
      }
      gaps.push_back(t[k].gap);
      viols.push_back(t[k].violation);
    }
    s.n_trials = static_cast<int>(gaps.size());
    if (gaps.empty()) {
      s.mean_gap = s.stderr_gap = s.mean_violation = s.stderr_violation = kNaN;
    } else {
      s.mean_gap = mean_of(gaps);
      s.stderr_gap = stderr_of(gaps, s.mean_gap);
      s.mean_violation = mean_of(viols);
      s.stderr_violation = stderr_of(viols, s.mean_violation);
    }
    out.push_back(s);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << kTraceHeader << '\n';
  for (const TraceRow& r : rows) {
    out << r.trial << ',' << r.checkpoint_queries << ',' << g17(r.gap) << ',' << g17(r.violation)
        << ',' << g17(r.dual_norm) << ',' << r.diverged << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  expect_header(in, kTraceHeader);
  std::vector<TraceRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 6) throw ConfigError("trace CSV: expected 6 columns in '" + line + "'");
    TraceRow r;
    r.trial = std::stoi(cells[0]);
    r.checkpoint_queries = std::stoull(cells[1]);
    r.gap = parse_double(cells[2]);
    r.violation = parse_double(cells[3]);
    r.dual_norm = parse_double(cells[4]);
    r.diverged = std::stoi(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const SummaryRow& r : rows) {
    out << r.checkpoint_queries << ',' << g17(r.mean_gap) << ',' << g17(r.stderr_gap) << ','
        << g17(r.mean_violation) << ',' << g17(r.stderr_violation) << ',' << r.n_trials << ','
        << r.n_diverged << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  expect_header(in, kSummaryHeader);
  std::vector<SummaryRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) throw ConfigError("summary CSV: expected 7 columns in '" + line + "'");
    SummaryRow r;
    r.checkpoint_queries = std::stoull(cells[0]);
    r.mean_gap = parse_double(cells[1]);
    r.stderr_gap = parse_double(cells[2]);
    r.mean_violation = parse_double(cells[3]);
    r.stderr_violation = parse_double(cells[4]);
    r.n_trials = std::stoi(cells[5]);
    r.n_diverged = std::stoi(cells[6]);
    rows.push_back(r);
  }
  return rows;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, int trial, double radius) {
  const QcqpInstance inst = make_instance(cfg, trial);
  ProblemSpec problem = inst.to_problem(cfg.noise);
  const SmoothingConfig smoothing = make_smoothing(cfg, problem, radius);
  const std::uint64_t run_seed =
      derive_seed(cfg.seed, StreamRole::kTrial, static_cast<std::uint64_t>(trial));
  ConexOptions options;
  options.divergence_threshold = cfg.divergence_threshold;

  TrialOutcome out;
  if (cfg.family == ProblemFamily::kQcqpNonconvex) {
    ProximalConfig prox = ProximalConfig::defaults(problem.constants(), cfg.K, cfg.T, cfg.schedule);
    prox.mu0 = std::max(cfg.mu_scale * problem.constants().grad_lipschitz[0], kMuFloor);
    for (std::size_t i = 0; i < prox.mu.size(); ++i) {
      prox.mu[i] = std::max(cfg.mu_scale * problem.constants().grad_lipschitz[i + 1], kMuFloor);
    }
    const MetaResult res = meta_run(problem, prox, smoothing, run_seed, options);
    out.diverged = res.diverged;
    const std::uint64_t per_step = res.steps.empty() ? 0 : res.steps.front().calls;
    for (int k : checkpoint_grid(cfg.K, cfg.checkpoints)) {
      TraceRow row;
      row.trial = trial;
      row.checkpoint_queries = per_step * static_cast<std::uint64_t>(k);
      const auto idx = static_cast<std::size_t>(k - 1);
      if (idx < res.steps.size() && std::isfinite(res.steps[idx].near.report.stationarity)) {
        const NearKkt& near = res.steps[idx].near;
        row.gap = near.report.stationarity;
        row.violation = near.report.violation;
        row.dual_norm = near.report.dual.norm();
      } else {
        row.gap = row.violation = row.dual_norm = kNaN;
        row.diverged = 1;
      }
      out.rows.push_back(row);
    }
    return out;
  }

  const ReferenceSolution ref = reference_solve(inst);
  out.reference_solved = ref.solved;
  out.reference_value = ref.f0_star;
  const ConexParams params = make_schedule(cfg.schedule, problem, smoothing, cfg.T);
  const ConexResult res = conex_run(problem, params, smoothing, run_seed, options);
  out.diverged = res.trace.diverged;
  for (int t : checkpoint_grid(cfg.T, cfg.checkpoints)) {
    const TraceRecord& rec = res.trace.records[static_cast<std::size_t>(t - 1)];
    TraceRow row;
    row.trial = trial;
    row.checkpoint_queries = rec.calls;
    row.gap = rec.objective - ref.f0_star;
    row.violation = rec.violation;
    row.dual_norm = rec.dual_norm;
    row.diverged = (res.trace.diverged && t - 1 >= res.trace.diverged_at) ? 1 : 0;
    out.rows.push_back(row);
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path dir(config.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory '" + config.output + "'");
  }

  ExperimentReport report;
  auto write_file = [&](const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << body;
    if (!out) throw Error("write failed for '" + path.string() + "'");
    report.files.push_back(path.string());
  };
  write_file(dir / "config.resolved.yaml", echo_config(config));

  // Theorem-1 radii do not depend on the listed radii; run once.
  const std::vector<double> radii =
      config.smoothing_theorem1 ? std::vector<double>{0.0} : config.radii;
  const bool sweep = radii.size() > 1;
  const int workers = std::max(1, std::min(jobs, config.trials));

  for (double radius : radii) {
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(config.trials));
    std::vector<std::exception_ptr> errors(outcomes.size());
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int t = next++; t < config.trials; t = next++) {
        try {
          outcomes[static_cast<std::size_t>(t)] = run_trial(config, t, radius);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    std::vector<TraceRow> all_rows;
    std::vector<std::vector<TraceRow>> traces;
    for (const TrialOutcome& o : outcomes) {
      if (!o.reference_solved) ++report.unsolved_references;
      all_rows.insert(all_rows.end(), o.rows.begin(), o.rows.end());
      traces.push_back(o.rows);
    }
    const std::string suffix = sweep ? "_nu" + radius_tag(radius) : "";
    std::ostringstream trace_csv;
    write_trace_csv(trace_csv, all_rows);
    write_file(dir / ("trace" + suffix + ".csv"), trace_csv.str());
    std::ostringstream summary_csv;
    write_summary_csv(summary_csv, summarize(traces));
    write_file(dir / ("summary" + suffix + ".csv"), summary_csv.str());
  }
  report.exit_code = report.unsolved_references > 0 ? 3 : 0;
  return report;
}

}  // namespace zoconex
