#include "zoconex/nonconvex.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "zoconex/rng.hpp"

namespace zoconex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

KktReport unavailable_report() {
  KktReport r;
  r.stationarity = r.complementarity = r.violation = kNaN;
  return r;
}

bool diagnosable(const ProblemSpec& problem, const Vector& x) {
  return problem.has_gradients() && problem.has_noiseless() && x.allFinite();
}

KktReport report_for(const ProblemSpec& problem, const Vector& x) {
  if (!diagnosable(problem, x)) return unavailable_report();
  const EuclideanGeometry geom;
  const Vector y = estimate_dual_for_kkt(problem, x, geom, problem.domain());
  return kkt_residual(problem, x, y, geom, problem.domain());
}

NearKkt near_for(const ProblemSpec& problem, const Vector& x) {
  if (!diagnosable(problem, x)) return {x, kNaN, unavailable_report()};
  return near_kkt_certificate(problem, x, EuclideanGeometry{}, problem.domain());
}

}  // namespace

ProximalConfig ProximalConfig::defaults(const SmoothnessConstants& constants, int K, int T,
                                        ScheduleSpec inner) {
  ProximalConfig cfg;
  cfg.mu0 = std::max(constants.grad_lipschitz.at(0), kMuFloor);
  for (std::size_t i = 1; i < constants.size(); ++i) {
    cfg.mu.push_back(std::max(constants.grad_lipschitz[i], kMuFloor));
  }
  cfg.K = K;
  cfg.T = T;
  cfg.inner = inner;
  return cfg;
}

void ProximalConfig::validate(int m) const {
  if (static_cast<int>(mu.size()) != m) {
    throw ConfigError("proximal config has " + std::to_string(mu.size()) + " weights, expected " +
                      std::to_string(m));
  }
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(mu0) || !std::all_of(mu.begin(), mu.end(), ok)) {
    throw ConfigError("proximal weights must be finite and > 0");
  }
  if (K < 1) throw ConfigError("proximal config requires K >= 1");
  if (T < 1) throw ConfigError("proximal config requires T >= 1");
}

double KktReport::max_residual() const {
  return std::max({stationarity, complementarity, violation});
}

ProblemSpec regularize(const ProblemSpec& problem, const Vector& center,
                       const ProximalConfig& prox_config, const BregmanGeometry& geom) {
  const int m = problem.constraint_count();
  prox_config.validate(m);
  require_dimension(center.size(), problem.dimension(), "proximal center");
  if (!problem.domain().contains(center)) throw DomainError("proximal center lies outside X");

  const double spread = problem.domain().max_distance_from(center);
  SmoothnessConstants k = problem.constants();
  std::vector<StochasticOracle> oracles;
  auto shared_center = std::make_shared<const Vector>(center);
  for (int i = 0; i <= m; ++i) {
    const double mu = i == 0 ? prox_config.mu0 : prox_config.mu[static_cast<std::size_t>(i - 1)];
    const auto s = static_cast<std::size_t>(i);
    k.grad_lipschitz[s] += 2.0 * mu * geom.smoothness();
    k.value_lipschitz[s] += 2.0 * mu * spread;

    const StochasticOracle& base = problem.oracle(i);
    StochasticOracle o = base;
    o.value = [f = base.value, shared_center, mu, geom](const Vector& x) {
      return f(x) + 2.0 * mu * bregman_divergence(geom, x, *shared_center);
    };
    if (base.gradient) {
      o.gradient = [g = base.gradient, shared_center, mu](const Vector& x) {
        return Vector(g(x) + 2.0 * mu * (x - *shared_center));
      };
    }
    oracles.push_back(std::move(o));
  }
  return ProblemSpec(problem.dimension(), std::move(oracles), problem.domain(), std::move(k));
}

KktReport kkt_residual(const ProblemSpec& problem, const Vector& x, const Vector& y,
                       const BregmanGeometry& /*geom*/, const Domain& domain) {
  const int m = problem.constraint_count();
  require_dimension(x.size(), problem.dimension(), "KKT point");
  require_dimension(y.size(), m, "KKT dual");
  if (!domain.contains(x)) throw DomainError("KKT point lies outside X");
  if (!problem.has_gradients()) throw ConfigError("KKT residual needs noiseless gradients");

  Vector g = problem.oracle(0).gradient(x);
  KktReport r;
  r.dual = y;
  for (int i = 1; i <= m; ++i) {
    const double fi = problem.value(i, x);
    g += y[i - 1] * problem.oracle(i).gradient(x);
    r.complementarity += std::abs(y[i - 1] * fi);
  }
  r.stationarity = normal_cone_distance(domain, x, g);
  r.violation = problem.violation(x);
  return r;
}

Vector estimate_dual_for_kkt(const ProblemSpec& problem, const Vector& x,
                             const BregmanGeometry& /*geom*/, const Domain& domain,
                             double complementarity_weight) {
  const int m = problem.constraint_count();
  const int n = problem.dimension();
  if (m == 0) return Vector(0);
  const Vector g0 = problem.oracle(0).gradient(x);
  Matrix jac(n, m);
  for (int i = 1; i <= m; ++i) jac.col(i - 1) = problem.oracle(i).gradient(x);

  // Complementarity enters as a diagonal quadratic w_i y_i^2 with w_i = weight f_i^2.
  const Vector comp = complementarity_weight * problem.constraint_values(x).array().square().matrix();
  const double sigma = jac.jacobiSvd().singularValues()(0);
  const double lipschitz = sigma * sigma + comp.maxCoeff();
  if (!(lipschitz > 0.0)) return Vector::Zero(m);
  const double step = 1.0 / lipschitz;

  auto residual = [&](const Vector& y) { return normal_cone_residual(domain, x, g0 + jac * y); };
  auto objective = [&](const Vector& y) {
    return residual(y).squaredNorm() + y.cwiseProduct(y).dot(comp);
  };
  Vector y = Vector::Zero(m);
  Vector y_prev = y;
  Vector best = y;
  double best_obj = objective(y);
  double t = 1.0;
  for (int iter = 0; iter < 1000; ++iter) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Vector z = y + ((t - 1.0) / t_next) * (y - y_prev);
    const Vector grad = jac.transpose() * residual(z) + comp.cwiseProduct(z);
    y_prev = y;
    y = project_nonneg(z - step * grad);
    t = t_next;
    const double obj = objective(y);
    if (obj < best_obj) {
      best_obj = obj;
      best = y;
    }
  }
  return best;
}

NearKkt near_kkt_certificate(const ProblemSpec& problem, const Vector& x,
                             const BregmanGeometry& geom, const Domain& domain) {
  const int m = problem.constraint_count();
  const Vector y = estimate_dual_for_kkt(problem, x, geom, domain, 1.0);
  Vector g = problem.oracle(0).gradient(x);
  double beta = problem.constants().grad_lipschitz[0];
  for (int i = 1; i <= m; ++i) {
    g += y[i - 1] * problem.oracle(i).gradient(x);
    beta += y[i - 1] * problem.constants().grad_lipschitz[static_cast<std::size_t>(i)];
  }
  if (!(beta > 0.0)) beta = 1.0;
  NearKkt out;
  out.point = domain.project(x - g / beta);
  out.delta = (out.point - x).norm();
  const Vector y_near = estimate_dual_for_kkt(problem, out.point, geom, domain, 1.0);
  out.report = kkt_residual(problem, out.point, y_near, geom, domain);
  return out;
}

MetaResult meta_run(ProblemSpec& problem, const ProximalConfig& prox_config,
                    const SmoothingConfig& config, std::uint64_t master_seed,
                    const ConexOptions& options) {
  const int m = problem.constraint_count();
  prox_config.validate(m);
  config.validate(m);
  const EuclideanGeometry geom;

  Vector x = options.x0 ? *options.x0 : problem.domain().project(Vector::Zero(problem.dimension()));
  require_dimension(x.size(), problem.dimension(), "initial point");
  if (!problem.domain().contains(x)) throw DomainError("initial point lies outside X");

  MetaResult out;
  StreamBank streams(master_seed);
  RngStream& trial = streams.stream(StreamRole::kTrial);
  out.k_hat = 1 + static_cast<int>(trial.next_u64() % static_cast<std::uint64_t>(prox_config.K));
  out.initial = report_for(problem, x);
  out.initial_near = near_for(problem, x);

  double best_score = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= prox_config.K; ++k) {
    ProblemSpec sub = regularize(problem, x, prox_config, geom);
    const ConexParams params = make_schedule(prox_config.inner, sub, config, prox_config.T);
    ConexOptions inner = options;
    inner.x0 = x;
    const ConexResult res =
        conex_run(sub, params, config, derive_seed(master_seed, StreamRole::kOuter, k), inner);
    for (int i = 0; i <= m; ++i) {
      problem.ledger().record(static_cast<std::size_t>(i),
                              sub.ledger().calls(static_cast<std::size_t>(i)));
    }

    OuterStep step;
    step.center = x;
    step.x = res.x_bar;
    step.trace = res.trace;
    step.calls = sub.ledger().total();
    if (res.trace.diverged || !res.x_bar.allFinite()) {
      step.kkt = unavailable_report();
      step.near = {res.x_bar, kNaN, unavailable_report()};
      out.steps.push_back(std::move(step));
      out.diverged = true;
      break;
    }
    step.kkt = report_for(problem, res.x_bar);
    step.near = near_for(problem, res.x_bar);
    const double score = step.near.report.max_residual();
    if (std::isfinite(score) && score < best_score) {
      best_score = score;
      out.best_k = k;
    }
    x = res.x_bar;
    out.steps.push_back(std::move(step));
  }

  // A diverged run falls back to the last completed outer iterate.
  const int completed = static_cast<int>(out.steps.size()) - (out.diverged ? 1 : 0);
  out.k_hat = std::min(out.k_hat, completed);
  out.x_hat = out.k_hat >= 1 ? out.steps[static_cast<std::size_t>(out.k_hat - 1)].x : x;
  return out;
}

}  // namespace zoconex
