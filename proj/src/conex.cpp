#include "zoconex/conex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace zoconex {

ConexParams ConexParams::constant(int T, double eta, double tau) {
  if (T < 1) throw ConfigError("iteration count T must be >= 1");
  const auto n = static_cast<std::size_t>(T);
  return {std::vector<double>(n, 1.0), std::vector<double>(n, 1.0), std::vector<double>(n, eta),
          std::vector<double>(n, tau)};
}

void ConexParams::validate(double min_eta) const {
  const std::size_t T = eta.size();
  if (T == 0) throw ConfigError("schedule is empty");
  if (gamma.size() != T || theta.size() != T || tau.size() != T) {
    throw ConfigError("schedule vectors differ in length");
  }
  constexpr double kRel = 1e-12;
  for (std::size_t t = 0; t < T; ++t) {
    if (!(gamma[t] > 0.0) || !(tau[t] > 0.0) || !(theta[t] >= 0.0) || !std::isfinite(eta[t]) ||
        !std::isfinite(tau[t])) {
      throw ConfigError("schedule entries must be finite with gamma, tau > 0");
    }
    if (!(eta[t] > min_eta)) {
      throw ConfigError("eta_t = " + std::to_string(eta[t]) + " must exceed L_0 + L_f = " +
                        std::to_string(min_eta) + " at t = " + std::to_string(t));
    }
    if (t == 0) continue;
    const double g_prev = gamma[t - 1];
    if (std::abs(gamma[t] * theta[t] - g_prev) > kRel * std::max(1.0, g_prev)) {
      throw ConfigError("schedule violates gamma_t theta_t = gamma_{t-1} at t = " + std::to_string(t));
    }
    const double tau_prev = g_prev * tau[t - 1];
    const double eta_prev = g_prev * eta[t - 1];
    if (gamma[t] * tau[t] > tau_prev * (1.0 + kRel)) {
      throw ConfigError("schedule violates gamma_t tau_t <= gamma_{t-1} tau_{t-1} at t = " +
                        std::to_string(t));
    }
    if (gamma[t] * eta[t] > eta_prev * (1.0 + kRel)) {
      throw ConfigError("schedule violates gamma_t eta_t <= gamma_{t-1} eta_{t-1} at t = " +
                        std::to_string(t));
    }
  }
}

Theorem1Steps theorem1_steps(int T, double diameter, double h_star, double sigma0_sq,
                             double sigma_nu_norm, double sigma_xf, double value_lipschitz_f) {
  if (T < 1) throw ConfigError("theorem1 schedule requires T >= 1");
  if (!(diameter > 0.0)) throw ConfigError("theorem1 schedule requires D_X > 0");
  const double dt = T;
  const double eta = std::max(
      std::sqrt(2.0 * dt * (h_star * h_star + sigma0_sq + 48.0 * sigma_nu_norm * sigma_nu_norm)) /
          diameter,
      6.0 * std::max(2.0 * value_lipschitz_f, 4.0 * sigma_nu_norm) / diameter);
  const double tau = std::max(std::sqrt(96.0 * dt) * sigma_xf,
                              2.0 * diameter * std::max(value_lipschitz_f, 4.0 * sigma_nu_norm));
  return {eta, tau};
}

ConexParams theorem1_schedule(const SmoothnessConstants& constants, double diameter, int T,
                              double dual_norm_bound, const SmoothingConfig& config, int n) {
  const int m = static_cast<int>(config.nu.size());
  constants.validate(static_cast<std::size_t>(m + 1));
  if (!(diameter > 0.0)) throw ConfigError("theorem1 schedule requires D_X > 0");
  const AggregateConstants agg = aggregate_constants(constants);

  const double sigma0_sq =
      gradient_variance_bound(config.radius(0), constants.grad_lipschitz[0],
                              constants.value_lipschitz[0], constants.grad_noise[0], n, diameter);
  double sigma_nu_sq = 0.0;
  for (int i = 1; i <= m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    sigma_nu_sq += gradient_variance_bound(config.radius(i), constants.grad_lipschitz[k],
                                           constants.value_lipschitz[k], constants.grad_noise[k], n,
                                           diameter);
  }
  const double sigma_nu = std::sqrt(sigma_nu_sq);
  const double sigma_xf =
      std::sqrt(value_variance_bound(constants, config, n) + diameter * diameter * sigma_nu_sq);
  const double h_star = agg.grad_lipschitz * diameter * dual_norm_bound / 2.0;

  const Theorem1Steps steps =
      theorem1_steps(T, diameter, h_star, sigma0_sq, sigma_nu, sigma_xf, agg.value_lipschitz);
  return ConexParams::constant(T, constants.grad_lipschitz[0] + agg.grad_lipschitz + steps.eta,
                               steps.tau);
}

ConexParams make_schedule(const ScheduleSpec& spec, const ProblemSpec& problem,
                          const SmoothingConfig& config, int T) {
  const SmoothnessConstants& c = problem.constants();
  const double base = c.grad_lipschitz[0] + aggregate_constants(c).grad_lipschitz;
  switch (spec.mode) {
    case ScheduleMode::kExplicit:
      return ConexParams::constant(T, spec.eta, spec.tau);
    case ScheduleMode::kSqrtT: {
      const double root = std::sqrt(static_cast<double>(T));
      return ConexParams::constant(T, base + spec.eta * root, spec.tau * root);
    }
    case ScheduleMode::kTheorem1: {
      const DomainExtent ext = domain_diameter(BregmanGeometry{}, problem.domain());
      return theorem1_schedule(c, ext.diameter, T, spec.dual_norm_bound, config,
                               problem.dimension());
    }
  }
  throw ConfigError("unknown schedule mode");
}

Vector Linearization::evaluate(const Vector& z) const {
  require_dimension(z.size(), base_point.size(), "linearization point");
  return values + grads.transpose() * (z - base_point);
}

Linearization build_linearization(ProblemSpec& problem, const Vector& x,
                                  const SmoothingConfig& config, StreamBank& streams) {
  const int n = problem.dimension();
  const int m = problem.constraint_count();
  Linearization lin{Vector(m), Matrix(n, m), x};
  for (int i = 1; i <= m; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    GradientEstimate est =
        two_point_gradient(problem, i, x, config.radius(i), streams.stream(StreamRole::kBarNoise, k),
                           streams.stream(StreamRole::kBarDirection, k));
    lin.values[i - 1] = est.value_at_shift;
    lin.grads.col(i - 1) = est.g;
  }
  return lin;
}

Vector extrapolate(const Vector& at_curr, const Vector& at_prev, double theta) {
  require_dimension(at_prev.size(), at_curr.size(), "extrapolate");
  return (1.0 + theta) * at_curr - theta * at_prev;
}

Vector extrapolate(const Linearization& lin_curr, const Vector& x_curr,
                   const Linearization& lin_prev, const Vector& x_prev, double theta) {
  return extrapolate(lin_curr.evaluate(x_curr), lin_prev.evaluate(x_prev), theta);
}

Vector dual_update(const Vector& y, const Vector& s, double tau) {
  if (!(tau > 0.0)) throw ConfigError("dual_update requires tau > 0");
  require_dimension(s.size(), y.size(), "dual_update");
  return project_nonneg(y + s / tau);
}

PrimalStep primal_update(ProblemSpec& problem, const BregmanGeometry& geom, const Vector& x,
                         const Vector& y_next, const SmoothingConfig& config, double eta,
                         StreamBank& streams) {
  const int m = problem.constraint_count();
  require_dimension(y_next.size(), m, "dual iterate");
  GradientEstimate g0 =
      two_point_gradient(problem, 0, x, config.radius(0), streams.stream(StreamRole::kNoise, 0),
                         streams.stream(StreamRole::kDirection, 0));
  Vector v = std::move(g0.g);
  for (int i = 1; i <= m; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    GradientEstimate gi =
        two_point_gradient(problem, i, x, config.radius(i), streams.stream(StreamRole::kNoise, k),
                           streams.stream(StreamRole::kDirection, k));
    v += y_next[i - 1] * gi.g;
  }
  PrimalStep step{prox_step(geom, problem.domain(), v, x, eta), std::move(v), g0.value_at_base};
  return step;
}

void IterateAverage::add(const Vector& x, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("averaging weight must be > 0");
  if (sum_.size() == 0) sum_ = Vector::Zero(x.size());
  require_dimension(x.size(), sum_.size(), "averaged iterate");
  sum_ += gamma * x;
  weight_ += gamma;
}

Vector IterateAverage::mean() const {
  if (!(weight_ > 0.0)) throw Error("iterate average has zero total weight");
  return sum_ / weight_;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool exploded(const Vector& v, double threshold) {
  return !v.allFinite() || v.lpNorm<Eigen::Infinity>() > threshold;
}

}  // namespace

ConexResult conex_run(ProblemSpec& problem, const ConexParams& params,
                      const SmoothingConfig& config, std::uint64_t master_seed,
                      const ConexOptions& options) {
  const int n = problem.dimension();
  const int m = problem.constraint_count();
  const int T = params.iterations();
  const SmoothnessConstants& c = problem.constants();
  params.validate(c.grad_lipschitz[0] + aggregate_constants(c).grad_lipschitz);
  config.validate(m);

  const BregmanGeometry geom;
  const Domain& domain = problem.domain();
  Vector x = options.x0 ? *options.x0 : domain.project(Vector::Zero(n));
  require_dimension(x.size(), n, "initial point");
  if (!domain.contains(x)) throw DomainError("initial point lies outside X");

  StreamBank streams(master_seed);
  ConexResult result;
  RunTrace& trace = result.trace;
  trace.noiseless = problem.has_noiseless();
  if (options.record_trace) trace.records.reserve(static_cast<std::size_t>(T));

  Vector y = Vector::Zero(m);
  IterateAverage average(n);

  // Initialization round at x^(0): the linearization that also stands in for
  // x^(-1), plus one two-point estimate per function for the starting record.
  // lin_back2 / lin_back1 / lin_newest hold the linearizations built at
  // x^(t-2) / x^(t-1) / x^(t); before the first step all three are the same.
  Linearization lin_newest = build_linearization(problem, x, config, streams);
  double initial_objective = 0.0;
  for (int i = 0; i <= m; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    GradientEstimate est =
        two_point_gradient(problem, i, x, config.radius(i), streams.stream(StreamRole::kNoise, k),
                           streams.stream(StreamRole::kDirection, k));
    if (i == 0) initial_objective = est.value_at_base;
  }
  Linearization lin_back1 = lin_newest;
  Linearization lin_back2 = lin_newest;
  Vector x_prev = x;
  trace.initial = {-1, problem.ledger().total(),
                   trace.noiseless ? problem.value(0, x) : initial_objective,
                   trace.noiseless ? problem.violation(x) : project_nonneg(lin_newest.values).norm(),
                   0.0};

  auto fail = [&](int t) {
    trace.diverged = true;
    trace.diverged_at = t;
    if (!options.record_trace) return;
    for (int s = t; s < T; ++s) {
      trace.records.push_back({s, problem.ledger().total(), kNaN, kNaN, kNaN});
    }
  };

  for (int t = 0; t < T; ++t) {
    const auto k = static_cast<std::size_t>(t);
    try {
      // l_F(x^(t)) is linearized at x^(t-1); l_F(x^(t-1)) at x^(t-2).
      const Vector s = extrapolate(lin_back1, x, lin_back2, x_prev, params.theta[k]);
      y = dual_update(y, s, params.tau[k]);
      if (exploded(y, options.divergence_threshold)) {
        fail(t);
        break;
      }
      PrimalStep step = primal_update(problem, geom, x, y, config, params.eta[k], streams);
      if (exploded(step.x_next, options.divergence_threshold)) {
        fail(t);
        break;
      }
      x_prev = std::move(x);
      x = std::move(step.x_next);
      average.add(x, params.gamma[k]);

      if (t > 0) {
        lin_back2 = std::move(lin_back1);
        lin_back1 = std::move(lin_newest);
      }
      lin_newest = build_linearization(problem, x, config, streams);
      if (!lin_newest.values.allFinite() || !lin_newest.grads.allFinite()) {
        fail(t);
        break;
      }
      if (options.record_trace) {
        TraceRecord rec{t, problem.ledger().total(), 0.0, 0.0, y.norm()};
        if (trace.noiseless) {
          const Vector xbar = average.mean();
          rec.objective = problem.value(0, xbar);
          rec.violation = problem.violation(xbar);
        } else {
          rec.objective = step.objective_estimate;
          rec.violation = project_nonneg(lin_newest.values).norm();
        }
        trace.records.push_back(rec);
      }
    } catch (const EstimatorError&) {
      fail(t);
      break;
    }
  }

  result.x_bar = average.weight() > 0.0 ? average.mean() : x;
  result.y_last = y;
  return result;
}

}  // namespace zoconex
