#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "helpers.hpp"
#include "zoconex/nonconvex.hpp"

using namespace zoconex;
using namespace testing_helpers;

namespace {

ProximalConfig prox(double mu0, std::vector<double> mu, int K = 1, int T = 1) {
  ProximalConfig c;
  c.mu0 = mu0;
  c.mu = std::move(mu);
  c.K = K;
  c.T = T;
  c.inner = {ScheduleMode::kSqrtT, 40.0, 1.0, 1.0};
  return c;
}

/// f_0 = ||x - c||^2 with constraint x_1 - 0.9 <= 0 on Box[-1,1]^2.
QcqpInstance shifted_norm(const Vector& c) {
  QcqpInstance q;
  q.n = 2;
  q.m = 1;
  q.A = {Matrix::Identity(2, 2), Matrix::Zero(2, 2)};
  q.b = {-2.0 * c, (Vector(2) << 1.0, 0.0).finished()};
  q.c = {c.squaredNorm(), -0.9};
  q.domain = Domain::box(2, -1.0, 1.0);
  return q;
}

/// Independent box normal-cone distance: lower-active coordinates keep min(g, 0),
/// upper-active keep max(g, 0), interior ones keep g.
double box_residual(const Vector& lo, const Vector& hi, const Vector& x, const Vector& g) {
  double s = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    double r = g[j];
    if (x[j] <= lo[j]) r = std::min(g[j], 0.0);
    if (x[j] >= hi[j]) r = std::max(g[j], 0.0);
    s += r * r;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("regularized oracles") {
  const EuclideanGeometry g;
  const QcqpInstance q = generate_qcqp(3, 1, false, 4);
  const ProblemSpec p = q.to_problem(NoiseModel::none());
  const Vector center = Vector::Constant(3, 0.1);

  const ProblemSpec tiny = regularize(p, center, prox(1e-12, {1e-12}), g);
  RngStream rng(2);
  for (int k = 0; k < 20; ++k) {
    const Vector x = q.domain.sample(rng);
    for (int i = 0; i <= 1; ++i) CHECK(std::abs(tiny.value(i, x) - p.value(i, x)) <= 1e-9);
  }

  const ProblemSpec reg = regularize(p, center, prox(1.0, {0.5}), g);
  CHECK(reg.value(0, center) == p.value(0, center));
  Vector x = center;
  x[0] += 2.0 * std::sqrt(0.5);
  x[1] -= 2.0 * std::sqrt(0.5);
  CHECK(std::abs((x - center).norm() - 2.0) <= 1e-12);
  CHECK(reg.value(0, x) - p.value(0, x) == doctest::Approx(4.0));
  CHECK(reg.value(1, x) - p.value(1, x) == doctest::Approx(2.0));

  // Gradients and constants follow the added term.
  const Vector grad = reg.oracle(0).gradient(x);
  CHECK((grad - p.oracle(0).gradient(x) - 2.0 * (x - center)).norm() <= 1e-12);
  CHECK(reg.constants().grad_lipschitz[0] == doctest::Approx(p.constants().grad_lipschitz[0] + 2.0));
  CHECK(reg.constants().value_lipschitz[1] ==
        doctest::Approx(p.constants().value_lipschitz[1] + 1.0 * q.domain.max_distance_from(center)));
  CHECK(reg.ledger().total() == 0);

  CHECK_THROWS_AS(regularize(p, Vector::Constant(3, 2.0), prox(1.0, {1.0}), g), DomainError);
  CHECK_THROWS_AS(prox(1.0, {1.0, 1.0}).validate(1), ConfigError);
}

TEST_CASE("default proximal weights convexify every subproblem") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const QcqpInstance q = generate_qcqp(10, 2, false, seed);
    const ProximalConfig c = ProximalConfig::defaults(q.constants(NoiseModel::none()), 5, 10, {});
    CHECK(c.mu.size() == 2);
    for (int i = 0; i <= 2; ++i) {
      const double mu = i == 0 ? c.mu0 : c.mu[static_cast<std::size_t>(i - 1)];
      CHECK(mu >= kMuFloor);
      Eigen::SelfAdjointEigenSolver<Matrix> es(2.0 * q.A[static_cast<std::size_t>(i)]);
      CHECK(es.eigenvalues().minCoeff() + 2.0 * mu >= 0.0);
    }
  }
}

TEST_CASE("KKT residual examples") {
  const EuclideanGeometry g;
  const Vector c = (Vector(2) << 0.2, 0.1).finished();
  const QcqpInstance q = shifted_norm(c);
  const ProblemSpec p = q.to_problem(NoiseModel::none());
  const KktReport at_min = kkt_residual(p, c, Vector::Zero(1), g, q.domain);
  CHECK(at_min.stationarity <= 1e-6);
  CHECK(at_min.complementarity == 0.0);
  CHECK(at_min.violation == 0.0);
  const KktReport other = kkt_residual(p, (Vector(2) << -0.5, 0.7).finished(), Vector::Zero(1), g,
                                       q.domain);
  CHECK(other.complementarity == 0.0);
  CHECK(other.stationarity > 0.1);
  CHECK_THROWS_AS(kkt_residual(p, Vector::Constant(2, 3.0), Vector::Zero(1), g, q.domain),
                  DomainError);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const QcqpInstance r = generate_qcqp(6, 2, true, 50 + seed);
    const ReferenceSolution ref = reference_solve(r);
    REQUIRE(ref.solved);
    const KktReport k = kkt_residual(r.to_problem(NoiseModel::none()), ref.x_star, ref.y_star, g,
                                     r.domain);
    CHECK(k.stationarity <= 1e-4);
    CHECK(k.complementarity <= 1e-4);
    CHECK(k.violation <= 1e-4);
    CHECK(k.max_residual() <= 1e-4);
  }
}

TEST_CASE("dual estimates") {
  const EuclideanGeometry g;
  // f_0 = x_1, f_1 = -x_1 - 0.5: gradients cancel at y = 1.
  QcqpInstance q;
  q.n = 2;
  q.m = 1;
  q.A = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  q.b = {(Vector(2) << 1.0, 0.0).finished(), (Vector(2) << -1.0, 0.0).finished()};
  q.c = {0.0, -0.5};
  q.domain = Domain::box(2, -1.0, 1.0);
  const ProblemSpec p = q.to_problem(NoiseModel::none());
  const Vector y = estimate_dual_for_kkt(p, Vector::Zero(2), g, q.domain);
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-6));

  const QcqpInstance flat = shifted_norm(Vector::Zero(2));
  const Vector y0 = estimate_dual_for_kkt(flat.to_problem(NoiseModel::none()), Vector::Zero(2), g,
                                          flat.domain);
  CHECK(y0.norm() <= 1e-9);

  // Grid oracle over y in [0, 10]^2 at an interior point.
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const QcqpInstance r = generate_qcqp(5, 2, true, 80 + seed);
    const ProblemSpec rp = r.to_problem(NoiseModel::none());
    const Vector x = Vector::Constant(5, 0.3 - 0.2 * static_cast<double>(seed));
    const Vector g0 = r.gradient(0, x);
    const Vector g1 = r.gradient(1, x);
    const Vector g2 = r.gradient(2, x);
    const Vector lo = Vector::Constant(5, -1.0);
    const Vector hi = Vector::Constant(5, 1.0);
    auto residual = [&](double a, double b) { return box_residual(lo, hi, x, g0 + a * g1 + b * g2); };
    double best = 1e300;
    double ba = 0.0;
    double bb = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      for (int j = 0; j <= 1000; ++j) {
        const double v = residual(i / 100.0, j / 100.0);
        if (v < best) {
          best = v;
          ba = i / 100.0;
          bb = j / 100.0;
        }
      }
    }
    // Refine around the best grid cell.
    for (int i = -100; i <= 100; ++i) {
      for (int j = -100; j <= 100; ++j) {
        const double a = std::max(0.0, ba + i * 1e-4);
        const double b = std::max(0.0, bb + j * 1e-4);
        best = std::min(best, residual(a, b));
      }
    }
    const Vector est = estimate_dual_for_kkt(rp, x, g, r.domain);
    CHECK((est.array() >= 0.0).all());
    CHECK(residual(est[0], est[1]) <= best + 1e-3);
  }
}

TEST_CASE("near-point certificate") {
  const EuclideanGeometry g;
  const QcqpInstance q = generate_qcqp(6, 2, true, 5);
  const ReferenceSolution ref = reference_solve(q);
  const ProblemSpec p = q.to_problem(NoiseModel::none());
  const NearKkt at_ref = near_kkt_certificate(p, ref.x_star, g, q.domain);
  CHECK(at_ref.delta <= 1e-4);
  CHECK(at_ref.report.max_residual() <= 1e-3);
  const NearKkt far = near_kkt_certificate(p, Vector::Zero(6), g, q.domain);
  CHECK(q.domain.contains(far.point));
  CHECK(far.delta == doctest::Approx((far.point - Vector::Zero(6)).norm()));
  CHECK(far.report.max_residual() > at_ref.report.max_residual());
}

TEST_CASE("meta-algorithm") {
  const QcqpInstance q = generate_qcqp(6, 2, false, 12);
  const SmoothingConfig cfg = SmoothingConfig::uniform(0.05, 2);
  ProximalConfig pc = ProximalConfig::defaults(q.constants(NoiseModel::none()), 4, 200,
                                               {ScheduleMode::kSqrtT, 40.0, 1.0, 1.0});

  ProblemSpec p1 = q.to_problem(NoiseModel::gaussian(0.1));
  ProblemSpec p2 = q.to_problem(NoiseModel::gaussian(0.1));
  const MetaResult a = meta_run(p1, pc, cfg, 3);
  const MetaResult b = meta_run(p2, pc, cfg, 3);
  CHECK(a.k_hat == b.k_hat);
  CHECK(a.x_hat == b.x_hat);
  CHECK(a.best_k == b.best_k);
  CHECK(a.k_hat >= 1);
  CHECK(a.k_hat <= 4);
  REQUIRE(a.steps.size() == 4);
  CHECK(p1.ledger().total() == 4 * ledger_expected_calls(2, 200));
  for (std::size_t k = 1; k < a.steps.size(); ++k) CHECK(a.steps[k].center == a.steps[k - 1].x);
  CHECK(a.x_hat == a.steps[static_cast<std::size_t>(a.k_hat - 1)].x);

  // K = 1 is one regularized run from x_0.
  pc.K = 1;
  ProblemSpec p3 = q.to_problem(NoiseModel::gaussian(0.1));
  const MetaResult one = meta_run(p3, pc, cfg, 9);
  const Vector x0 = q.domain.project(Vector::Zero(6));
  ProblemSpec sub = regularize(q.to_problem(NoiseModel::gaussian(0.1)), x0, pc, EuclideanGeometry{});
  const ConexOptions opts{x0, 1e12, true};
  const ConexResult direct = conex_run(sub, make_schedule(pc.inner, sub, cfg, pc.T), cfg,
                                       derive_seed(9, StreamRole::kOuter, 1), opts);
  CHECK(one.k_hat == 1);
  CHECK(one.x_hat == direct.x_bar);
}

TEST_CASE("meta-algorithm on a convex problem matches a direct solve") {
  const QcqpInstance q = generate_qcqp(6, 2, true, 14);
  const ReferenceSolution ref = reference_solve(q);
  REQUIRE(ref.solved);
  const SmoothingConfig cfg = SmoothingConfig::uniform(0.05, 2);
  const ScheduleSpec inner{ScheduleMode::kSqrtT, 4.0, 4.0, 1.0};
  const int T = 2000;
  const int K = 3;
  auto error = [&](const Vector& x) {
    const InstanceMetrics mt = metrics(q, ref, x);
    return std::abs(mt.gap) + mt.violation;
  };
  double meta_err = 0.0;
  double direct_err = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ProximalConfig pc = ProximalConfig::defaults(q.constants(NoiseModel::none()), K, T, inner);
    pc.mu0 = 1e-3;
    std::fill(pc.mu.begin(), pc.mu.end(), 1e-3);
    ProblemSpec pm = q.to_problem(NoiseModel::gaussian(0.1));
    const MetaResult mr = meta_run(pm, pc, cfg, seed);
    meta_err += error(mr.steps.back().x);
    ProblemSpec pd = q.to_problem(NoiseModel::gaussian(0.1));
    const ConexResult dr = conex_run(pd, make_schedule(inner, pd, cfg, K * T), cfg, seed);
    direct_err += error(dr.x_bar);
  }
  CHECK(meta_err <= 2.0 * direct_err);
}
