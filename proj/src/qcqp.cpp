#include "zoconex/qcqp.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "zoconex/nonconvex.hpp"
#include "zoconex/rng.hpp"

namespace zoconex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kConvexEigTol = 1e-8;
constexpr int kCornerEnumerationMaxDim = 12;

double min_eigenvalue(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_abs_eigenvalue(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix standard_normal_matrix(int rows, int cols, RngStream& rng) {
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) g(i, j) = rng.gaussian();
  }
  return g;
}

/// sup over X of ||2 A x + b||. Exact at box corners for small n (a convex
/// function peaks at a vertex), otherwise the triangle-inequality bound.
double value_lipschitz_over(const Matrix& a, const Vector& b, const Domain& domain) {
  const double spectral = max_abs_eigenvalue(a);
  if (!domain.is_box()) {
    const EuclideanBall& ball = domain.as_ball();
    return (2.0 * a * ball.center + b).norm() + 2.0 * spectral * ball.radius;
  }
  const Box& box = domain.as_box();
  const int n = static_cast<int>(b.size());
  if (n > kCornerEnumerationMaxDim) return b.norm() + 2.0 * spectral * domain.max_norm();
  double best = 0.0;
  Vector corner(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (int j = 0; j < n; ++j) corner[j] = ((mask >> j) & 1U) ? box.upper[j] : box.lower[j];
    best = std::max(best, (2.0 * a * corner + b).norm());
  }
  return best;
}

// ---------------------------------------------------------------------------
// Log-barrier reference solver.

class Barrier {
 public:
  explicit Barrier(const QcqpInstance& inst) : inst_(inst) {}

  bool strictly_feasible(const Vector& x) const {
    for (int i = 1; i <= inst_.m; ++i) {
      if (!(inst_.value(i, x) < 0.0)) return false;
    }
    if (inst_.domain.is_box()) {
      const Box& box = inst_.domain.as_box();
      return ((x - box.lower).array() > 0.0).all() && ((box.upper - x).array() > 0.0).all();
    }
    const EuclideanBall& ball = inst_.domain.as_ball();
    return (x - ball.center).squaredNorm() < ball.radius * ball.radius;
  }

  double phi(const Vector& x, double mu) const {
    if (!strictly_feasible(x)) return kInf;
    double barrier = 0.0;
    for (int i = 1; i <= inst_.m; ++i) barrier -= std::log(-inst_.value(i, x));
    if (inst_.domain.is_box()) {
      const Box& box = inst_.domain.as_box();
      barrier -= (x - box.lower).array().log().sum() + (box.upper - x).array().log().sum();
    } else {
      const EuclideanBall& ball = inst_.domain.as_ball();
      barrier -= std::log(ball.radius * ball.radius - (x - ball.center).squaredNorm());
    }
    return inst_.value(0, x) + mu * barrier;
  }

  void derivatives(const Vector& x, double mu, Vector& g, Matrix& h) const {
    g = inst_.gradient(0, x);
    h = 2.0 * inst_.A[0];
    for (int i = 1; i <= inst_.m; ++i) {
      const double s = -inst_.value(i, x);
      const Vector gi = inst_.gradient(i, x);
      g += (mu / s) * gi;
      h += (mu / s) * 2.0 * inst_.A[static_cast<std::size_t>(i)];
      h += (mu / (s * s)) * gi * gi.transpose();
    }
    if (inst_.domain.is_box()) {
      const Box& box = inst_.domain.as_box();
      const Eigen::ArrayXd lo = (x - box.lower).array();
      const Eigen::ArrayXd up = (box.upper - x).array();
      g += (mu * (1.0 / up - 1.0 / lo)).matrix();
      h.diagonal() += (mu * (1.0 / (lo * lo) + 1.0 / (up * up))).matrix();
    } else {
      const EuclideanBall& ball = inst_.domain.as_ball();
      const Vector d = x - ball.center;
      const double s = ball.radius * ball.radius - d.squaredNorm();
      g += (2.0 * mu / s) * d;
      h += (4.0 * mu / (s * s)) * d * d.transpose();
      h.diagonal().array() += 2.0 * mu / s;
    }
  }

  /// Damped Newton centering; indefinite Hessians are shifted to positive definite.
  Vector center(Vector x, double mu) const {
    const int n = inst_.n;
    Vector g;
    Matrix h;
    for (int iter = 0; iter < 200; ++iter) {
      derivatives(x, mu, g, h);
      Eigen::LLT<Matrix> llt(h);
      if (llt.info() != Eigen::Success) {
        const double shift = std::max(1e-8, 2.0 * std::abs(min_eigenvalue(h)));
        llt.compute(h + shift * Matrix::Identity(n, n));
      }
      const Vector dx = -llt.solve(g);
      const double decrement = -g.dot(dx);
      if (!(decrement > 1e-20)) break;
      const double f = phi(x, mu);
      double step = 1.0;
      bool moved = false;
      while (step > 1e-20) {
        const Vector trial = x + step * dx;
        const double ft = phi(trial, mu);
        if (ft <= f - 0.25 * step * decrement) {
          x = trial;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved || 0.5 * decrement < 1e-14) break;
    }
    return x;
  }

  Vector path(Vector x, int halvings) const {
    double mu = 1.0;
    for (int k = 0; k <= halvings; ++k) {
      x = center(std::move(x), mu);
      last_mu_ = mu;
      mu *= 0.5;
    }
    return x;
  }

  double last_mu() const { return last_mu_; }

 private:
  const QcqpInstance& inst_;
  mutable double last_mu_ = 1.0;
};

Vector domain_center(const Domain& domain) {
  if (domain.is_box()) return 0.5 * (domain.as_box().lower + domain.as_box().upper);
  return domain.as_ball().center;
}

/// Projected gradient on the soft maximum (1/beta) log sum exp(beta f_i) over
/// a slightly shrunk X, stopped at the first strictly feasible iterate.
std::optional<Vector> phase_one(const QcqpInstance& inst, const Barrier& barrier, Vector x) {
  if (inst.m == 0) return std::nullopt;
  Domain inner = inst.domain;
  if (inst.domain.is_box()) {
    const Box& b = inst.domain.as_box();
    const Vector margin = 1e-6 * (b.upper - b.lower);
    inner = Domain::box(b.lower + margin, b.upper - margin);
  } else {
    inner = Domain::ball(inst.domain.as_ball().center, (1.0 - 1e-6) * inst.domain.as_ball().radius);
  }
  x = inner.project(x);
  double beta = 10.0;
  auto soft_max = [&](const Vector& z) {
    const Vector c = inst.constraint_values(z);
    const double top = c.maxCoeff();
    return top + std::log((beta * (c.array() - top)).exp().sum()) / beta;
  };
  double step = 1.0;
  for (int iter = 0; iter < 20000; ++iter) {
    if (barrier.strictly_feasible(x)) return x;
    const Vector c = inst.constraint_values(x);
    const Eigen::ArrayXd w = (beta * (c.array() - c.maxCoeff())).exp();
    Vector g = Vector::Zero(inst.n);
    for (int i = 1; i <= inst.m; ++i) g += (w[i - 1] / w.sum()) * inst.gradient(i, x);
    const double f = soft_max(x);
    bool moved = false;
    for (step *= 2.0; step > 1e-14; step *= 0.5) {
      const Vector trial = inner.project(x - step * g);
      if (soft_max(trial) < f - 1e-4 * g.dot(x - trial)) {
        x = trial;
        moved = true;
        break;
      }
    }
    if (!moved) {
      if (beta > 1e8) break;
      beta *= 4.0;
      step = 1.0;
    }
  }
  return barrier.strictly_feasible(x) ? std::optional<Vector>(x) : std::nullopt;
}

/// Pulls a candidate toward the domain centre, then toward the origin, until
/// the barrier is finite. Falls back to phase one.
std::optional<Vector> feasible_start(const QcqpInstance& inst, const Barrier& barrier,
                                     const Vector& candidate, const Vector& mid) {
  const Vector zero = Vector::Zero(candidate.size());
  for (const Vector* anchor : {&mid, &zero}) {
    double a = 1.0;
    for (int k = 0; k < 60; ++k) {
      const Vector x = *anchor + a * (candidate - *anchor);
      if (barrier.strictly_feasible(x)) return x;
      a *= 0.7;
    }
  }
  return phase_one(inst, barrier, candidate);
}

struct Candidate {
  Vector x;
  Vector y;
  double kkt;
  double feasibility;
  double f0;
};

Candidate certify(const QcqpInstance& inst, const ProblemSpec& problem, const Barrier& barrier,
                  const Vector& x) {
  Candidate c;
  c.x = x;
  // Barrier multipliers mu / (-f_i) lose digits to cancellation in f_i near
  // the boundary; the least-squares dual often certifies better.
  Vector barrier_dual(inst.m);
  for (int i = 1; i <= inst.m; ++i) barrier_dual[i - 1] = barrier.last_mu() / (-inst.value(i, x));
  const EuclideanGeometry geom;
  const Vector ls_dual = estimate_dual_for_kkt(problem, x, geom, inst.domain);
  const double kkt_barrier = kkt_residual(problem, x, barrier_dual, geom, inst.domain).max_residual();
  const double kkt_ls = kkt_residual(problem, x, ls_dual, geom, inst.domain).max_residual();
  c.y = kkt_ls < kkt_barrier ? ls_dual : barrier_dual;
  c.kkt = std::min(kkt_ls, kkt_barrier);
  c.feasibility = inst.m > 0 ? std::max(0.0, inst.constraint_values(x).maxCoeff()) : 0.0;
  c.f0 = inst.value(0, x);
  return c;
}

bool touches_box(const Domain& domain, const Vector& x) {
  if (!domain.is_box()) return false;
  const Box& box = domain.as_box();
  return ((x - box.lower).array() <= 1e-6).any() || ((box.upper - x).array() <= 1e-6).any();
}

void expect_token(std::istream& in, const std::string& want) {
  std::string got;
  if (!(in >> got) || got != want) {
    throw ConfigError("instance format: expected '" + want + "', got '" + got + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw ConfigError(std::string("instance format: bad ") + what);
  return v;
}

Vector read_vector(std::istream& in, int n, const char* what) {
  Vector v(n);
  for (int j = 0; j < n; ++j) v[j] = read_value<double>(in, what);
  return v;
}

void write_vector(std::ostream& out, const char* key, const Vector& v) {
  out << key;
  for (Eigen::Index j = 0; j < v.size(); ++j) out << ' ' << fmt::format("{:.17g}", v[j]);
  out << '\n';
}

}  // namespace

double QcqpInstance::value(int i, const Vector& x) const {
  const auto k = static_cast<std::size_t>(i);
  return x.dot(A[k] * x) + b[k].dot(x) + c[k];
}

Vector QcqpInstance::gradient(int i, const Vector& x) const {
  const auto k = static_cast<std::size_t>(i);
  return 2.0 * A[k] * x + b[k];
}

double QcqpInstance::smoothed_value(int i, const Vector& x, double nu) const {
  return value(i, x) + nu * nu * A[static_cast<std::size_t>(i)].trace();
}

Vector QcqpInstance::constraint_values(const Vector& x) const {
  Vector f(m);
  for (int i = 1; i <= m; ++i) f[i - 1] = value(i, x);
  return f;
}

double QcqpInstance::violation(const Vector& x) const {
  return project_nonneg(constraint_values(x)).norm();
}

double QcqpInstance::lagrangian(const Vector& x, const Vector& y) const {
  require_dimension(y.size(), m, "dual vector");
  double v = value(0, x);
  for (int i = 1; i <= m; ++i) v += y[i - 1] * value(i, x);
  return v;
}

SmoothnessConstants QcqpInstance::constants(const NoiseModel& noise) const {
  SmoothnessConstants k;
  const double sf = noise.stddev();
  for (int i = 0; i <= m; ++i) {
    const auto s = static_cast<std::size_t>(i);
    k.grad_lipschitz.push_back(2.0 * max_abs_eigenvalue(A[s]));
    k.value_lipschitz.push_back(value_lipschitz_over(A[s], b[s], domain));
    k.grad_noise.push_back(0.0);
    k.value_noise.push_back(sf);
  }
  return k;
}

ProblemSpec QcqpInstance::to_problem(const NoiseModel& noise) const {
  validate();
  auto shared = std::make_shared<const QcqpInstance>(*this);
  std::vector<StochasticOracle> oracles;
  for (int i = 0; i <= m; ++i) {
    StochasticOracle o;
    o.value = [shared, i](const Vector& x) { return shared->value(i, x); };
    o.gradient = [shared, i](const Vector& x) { return shared->gradient(i, x); };
    o.noise = noise;
    o.has_noiseless = true;
    oracles.push_back(std::move(o));
  }
  return ProblemSpec(n, std::move(oracles), domain, constants(noise));
}

void QcqpInstance::validate() const {
  if (n < 1 || m < 0) throw ConfigError("QCQP requires n >= 1 and m >= 0");
  const auto count = static_cast<std::size_t>(m + 1);
  if (A.size() != count || b.size() != count || c.size() != count) {
    throw ConfigError("QCQP needs m+1 quadratic, linear and constant terms");
  }
  require_dimension(domain.dimension(), n, "QCQP domain");
  bool psd = true;
  for (std::size_t i = 0; i < count; ++i) {
    if (A[i].rows() != n || A[i].cols() != n) throw DimensionError("QCQP matrix has wrong shape");
    require_dimension(b[i].size(), n, "QCQP linear term");
    if ((A[i] - A[i].transpose()).cwiseAbs().maxCoeff() > 0.0) {
      throw ConfigError("QCQP matrix " + std::to_string(i) + " is not symmetric");
    }
    if (min_eigenvalue(A[i]) < -kConvexEigTol) psd = false;
  }
  if (convex && !psd) throw ConfigError("QCQP flagged convex has an indefinite matrix");
}

QcqpInstance generate_qcqp(int n, int m, bool convex, std::uint64_t seed,
                           std::optional<Domain> domain) {
  if (n < 1 || m < 0) throw ConfigError("generate_qcqp requires n >= 1 and m >= 0");
  RngStream rng(derive_seed(seed, StreamRole::kInstance, 0));
  QcqpInstance inst;
  inst.n = n;
  inst.m = m;
  inst.convex = convex;
  inst.domain = domain ? *domain : Domain::box(n, -1.0, 1.0);
  require_dimension(inst.domain.dimension(), n, "QCQP domain");
  for (int i = 0; i <= m; ++i) {
    Matrix a;
    if (convex) {
      const Matrix g = standard_normal_matrix(n, n, rng);
      a = g.transpose() * g / static_cast<double>(n) + 1e-3 * Matrix::Identity(n, n);
    } else {
      // Redraw in the rare event that the spectrum does not straddle zero.
      for (;;) {
        const Matrix g = standard_normal_matrix(n, n, rng);
        a = 0.5 * (g + g.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
        if (n == 1 || (es.eigenvalues().minCoeff() < 0.0 && es.eigenvalues().maxCoeff() > 0.0)) {
          break;
        }
      }
    }
    a = (0.5 * (a + a.transpose())).eval();
    Vector b(n);
    for (int j = 0; j < n; ++j) b[j] = rng.gaussian();
    const double c0 = rng.gaussian();
    inst.A.push_back(std::move(a));
    inst.b.push_back(std::move(b));
    inst.c.push_back(i == 0 ? c0 : -1.0);
  }
  return inst;
}

QcqpInstance custom_1d_instance() {
  QcqpInstance inst;
  inst.n = 1;
  inst.m = 1;
  inst.convex = true;
  inst.domain = Domain::box(1, 0.0, 1.0);
  inst.A = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  inst.b = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  inst.c = {0.0, 0.5};
  return inst;
}

ReferenceSolution reference_solve(const QcqpInstance& instance, std::uint64_t seed) {
  instance.validate();
  const ProblemSpec problem = instance.to_problem(NoiseModel::none());
  const Barrier barrier(instance);
  const Vector mid = domain_center(instance.domain);
  constexpr int kHalvings = 40;
  constexpr double kKktTol = 1e-4;
  constexpr double kFeasTol = 1e-6;

  std::vector<Vector> starts;
  if (instance.convex) {
    starts.push_back(mid);
  } else {
    RngStream rng(derive_seed(seed, StreamRole::kInstance, 1));
    for (int s = 0; s < 32; ++s) starts.push_back(instance.domain.sample(rng));
  }

  std::optional<Candidate> best;
  auto better = [&](const Candidate& a, const Candidate& b) {
    const bool ca = a.kkt <= kKktTol && a.feasibility <= kFeasTol;
    const bool cb = b.kkt <= kKktTol && b.feasibility <= kFeasTol;
    if (ca != cb) return ca;
    if (ca) return a.f0 < b.f0;
    return a.kkt < b.kkt;
  };
  for (const Vector& s : starts) {
    const std::optional<Vector> x0 = feasible_start(instance, barrier, s, mid);
    if (!x0) continue;
    const Vector x = barrier.path(*x0, kHalvings);
    Candidate cand = certify(instance, problem, barrier, x);
    if (!best || better(cand, *best)) best = std::move(cand);
  }

  ReferenceSolution out;
  if (!best) {
    out.x_star = mid;
    out.y_star = Vector::Zero(instance.m);
    out.f0_star = instance.value(0, mid);
    out.kkt_residual = kInf;
    out.feasibility = kInf;
    return out;
  }
  out.x_star = best->x;
  out.y_star = best->y;
  out.f0_star = best->f0;
  out.kkt_residual = best->kkt;
  out.feasibility = best->feasibility;
  out.solved = best->kkt <= kKktTol && best->feasibility <= kFeasTol;
  out.box_active = touches_box(instance.domain, best->x);
  return out;
}

InstanceMetrics metrics(const QcqpInstance& instance, const ReferenceSolution& reference,
                        const Vector& x) {
  return {instance.value(0, x) - reference.f0_star, instance.violation(x)};
}

double gap_function_q(const QcqpInstance& instance, const Vector& x, const Vector& y,
                      const Vector& x_bar, const Vector& y_bar) {
  return instance.lagrangian(x, y_bar) - instance.lagrangian(x_bar, y);
}

SmoothedGapDiagnostic lemma4_gap_diagnostic(const QcqpInstance& instance,
                                            const SmoothingConfig& config, const Vector& x,
                                            const Vector& y, const Vector& x_bar,
                                            const Vector& y_bar) {
  require_dimension(static_cast<Eigen::Index>(config.nu.size()), instance.m, "smoothing radii");
  auto smoothed_lagrangian = [&](const Vector& p, const Vector& dual) {
    double v = instance.smoothed_value(0, p, config.nu0);
    for (int i = 1; i <= instance.m; ++i) {
      v += dual[i - 1] * instance.smoothed_value(i, p, config.nu[static_cast<std::size_t>(i - 1)]);
    }
    return v;
  };
  const double q = gap_function_q(instance, x, y, x_bar, y_bar);
  const double q_nu = smoothed_lagrangian(x, y_bar) - smoothed_lagrangian(x_bar, y);

  const double dn = instance.n;
  double sum = 0.0;
  for (int i = 1; i <= instance.m; ++i) {
    const double nu = config.nu[static_cast<std::size_t>(i - 1)];
    const double li = 2.0 * max_abs_eigenvalue(instance.A[static_cast<std::size_t>(i)]);
    sum += std::pow(nu, 4) * li * li;
  }
  const double l0 = 2.0 * max_abs_eigenvalue(instance.A[0]);
  const double rhs =
      config.nu0 * config.nu0 * l0 * dn + instance.domain.max_norm() * dn * std::sqrt(sum);
  return {std::abs(q - q_nu), rhs};
}

void write_instance(std::ostream& out, const QcqpInstance& instance) {
  out << "zoconex-qcqp 1\n";
  out << "n " << instance.n << "\nm " << instance.m << "\nconvex " << (instance.convex ? 1 : 0)
      << '\n';
  if (instance.domain.is_box()) {
    out << "domain box\n";
    write_vector(out, "lower", instance.domain.as_box().lower);
    write_vector(out, "upper", instance.domain.as_box().upper);
  } else {
    out << "domain ball\n";
    write_vector(out, "center", instance.domain.as_ball().center);
    out << "radius " << fmt::format("{:.17g}", instance.domain.as_ball().radius) << '\n';
  }
  for (int i = 0; i <= instance.m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << "function " << i << '\n';
    for (int r = 0; r < instance.n; ++r) {
      write_vector(out, "A", instance.A[k].row(r).transpose());
    }
    write_vector(out, "b", instance.b[k]);
    out << "c " << fmt::format("{:.17g}", instance.c[k]) << '\n';
  }
}

QcqpInstance read_instance(std::istream& in) {
  expect_token(in, "zoconex-qcqp");
  if (read_value<int>(in, "version") != 1) throw ConfigError("instance format: unknown version");
  QcqpInstance inst;
  expect_token(in, "n");
  inst.n = read_value<int>(in, "n");
  expect_token(in, "m");
  inst.m = read_value<int>(in, "m");
  if (inst.n < 1 || inst.m < 0) throw ConfigError("instance format: bad sizes");
  expect_token(in, "convex");
  inst.convex = read_value<int>(in, "convex") != 0;
  expect_token(in, "domain");
  const auto kind = read_value<std::string>(in, "domain kind");
  if (kind == "box") {
    expect_token(in, "lower");
    Vector lo = read_vector(in, inst.n, "lower");
    expect_token(in, "upper");
    Vector hi = read_vector(in, inst.n, "upper");
    inst.domain = Domain::box(std::move(lo), std::move(hi));
  } else if (kind == "ball") {
    expect_token(in, "center");
    Vector c = read_vector(in, inst.n, "center");
    expect_token(in, "radius");
    inst.domain = Domain::ball(std::move(c), read_value<double>(in, "radius"));
  } else {
    throw ConfigError("instance format: unknown domain '" + kind + "'");
  }
  for (int i = 0; i <= inst.m; ++i) {
    expect_token(in, "function");
    if (read_value<int>(in, "function index") != i) throw ConfigError("instance format: order");
    Matrix a(inst.n, inst.n);
    for (int r = 0; r < inst.n; ++r) {
      expect_token(in, "A");
      a.row(r) = read_vector(in, inst.n, "A").transpose();
    }
    expect_token(in, "b");
    inst.b.push_back(read_vector(in, inst.n, "b"));
    expect_token(in, "c");
    inst.c.push_back(read_value<double>(in, "c"));
    inst.A.push_back(std::move(a));
  }
  inst.validate();
  return inst;
}

}  // namespace zoconex
