#include "zoconex/diagnostics.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "zoconex/conex.hpp"
#include "zoconex/nonconvex.hpp"
#include "zoconex/qcqp.hpp"
#include "zoconex/rng.hpp"

namespace zoconex {

namespace {

struct Check {
  std::string name;
  std::function<std::string(bool&)> body;  // sets ok, returns a detail string
};

std::string prox_check(bool& ok) {
  RngStream rng(11);
  const EuclideanGeometry geom;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 6);
    const Domain dom = k % 2 == 0 ? Domain::box(n, -1.0, 2.0)
                                  : Domain::ball(Vector::Constant(n, 0.5), 1.5);
    const Vector x = dom.sample(rng);
    Vector v(n);
    for (int j = 0; j < n; ++j) v[j] = 5.0 * rng.gaussian();
    const double eta = rng.uniform(0.1, 10.0);
    const Vector xp = prox_step(geom, dom, v, x, eta);
    worst = std::max(worst, prox_vi_residual(dom, v, x, eta, xp));
  }
  ok = worst <= 1e-9;
  return fmt::format("max VI residual {:.3e} over 1000 probes", worst);
}

std::string normal_cone_check(bool& ok) {
  // g lives on a 0.25 lattice so the 0.05 grid over w contains the exact minimizer.
  RngStream rng(5);
  double worst = 0.0;
  for (int n = 1; n <= 2; ++n) {
    const Domain dom = Domain::box(n, 0.0, 1.0);
    const double coords[] = {0.0, 0.4, 1.0};
    for (int probe = 0; probe < 30; ++probe) {
      Vector x(n);
      Vector g(n);
      for (int j = 0; j < n; ++j) {
        x[j] = coords[rng.next_u64() % 3];
        g[j] = 0.25 * static_cast<double>(static_cast<int>(rng.next_u64() % 41) - 20);
      }
      auto admissible = [&](int j, double w) {
        if (x[j] <= 0.0) return w <= 0.0;
        if (x[j] >= 1.0) return w >= 0.0;
        return w == 0.0;
      };
      const int steps = 400;  // w_j in [-10, 10]
      double best = 1e300;
      const int outer = n == 2 ? steps : 0;
      for (int a = 0; a <= steps; ++a) {
        for (int b = 0; b <= outer; ++b) {
          const double w0 = static_cast<double>(a - 200) / 20.0;
          const double w1 = static_cast<double>(b - 200) / 20.0;
          if (!admissible(0, w0) || (n == 2 && !admissible(1, w1))) continue;
          const double r0 = g[0] + w0;
          const double r1 = n == 2 ? g[1] + w1 : 0.0;
          best = std::min(best, std::hypot(r0, r1));
        }
      }
      worst = std::max(worst, std::abs(best - normal_cone_distance(dom, x, g)));
    }
  }
  ok = worst <= 1e-6;
  return fmt::format("max deviation from grid search {:.3e} on 1-D and 2-D boxes", worst);
}

std::string reference_check(bool& ok) {
  double worst_kkt = 0.0;
  double worst_feas = 0.0;
  int unsolved = 0;
  for (int s = 0; s < 20; ++s) {
    const ReferenceSolution r = reference_solve(generate_qcqp(10, 2, true, 900 + s));
    worst_kkt = std::max(worst_kkt, r.kkt_residual);
    worst_feas = std::max(worst_feas, r.feasibility);
    unsolved += r.solved ? 0 : 1;
  }
  ok = worst_kkt <= 1e-4 && worst_feas <= 1e-6 && unsolved == 0;
  return fmt::format("20 convex instances: max KKT {:.3e}, max infeasibility {:.3e}", worst_kkt,
                     worst_feas);
}

std::string lemma4_check(bool& ok) {
  RngStream rng(17);
  double worst_margin = 1e300;
  for (int s = 0; s < 20; ++s) {
    const QcqpInstance inst = generate_qcqp(8, 2, s % 2 == 0, 300 + s);
    const SmoothnessConstants k = inst.constants(NoiseModel::none());
    const SmoothingConfig cfg =
        select_smoothing_parameters(k, inst.n, inst.m, 100, inst.domain.max_norm());
    auto dual = [&]() {
      Vector y(inst.m);
      for (int i = 0; i < inst.m; ++i) y[i] = std::abs(rng.gaussian());
      return Vector(y * (rng.uniform(0.0, inst.domain.max_norm()) / std::max(y.norm(), 1e-12)));
    };
    const SmoothedGapDiagnostic d = lemma4_gap_diagnostic(
        inst, cfg, inst.domain.sample(rng), dual(), inst.domain.sample(rng), dual());
    worst_margin = std::min(worst_margin, d.rhs - d.lhs);
  }
  ok = worst_margin >= 0.0;
  return fmt::format("min (bound - |Q - Q_nu|) {:.3e}", worst_margin);
}

std::string ledger_check(bool& ok) {
  ok = true;
  std::string detail;
  for (auto [m, T] : {std::pair{0, 5}, std::pair{1, 10}, std::pair{3, 100}}) {
    const QcqpInstance inst = generate_qcqp(4, m, true, 42);
    ProblemSpec p = inst.to_problem(NoiseModel::gaussian(0.1));
    const ConexParams params = make_schedule({ScheduleMode::kSqrtT, 4.0, 4.0, 1.0}, p,
                                             SmoothingConfig::uniform(0.05, m), T);
    conex_run(p, params, SmoothingConfig::uniform(0.05, m), 3);
    const auto want = ledger_expected_calls(m, T);
    ok = ok && p.ledger().total() == want;
    detail += fmt::format("(m={}, T={}): {}/{} ", m, T, p.ledger().total(), want);
  }
  return detail;
}

std::string determinism_check(bool& ok) {
  const QcqpInstance inst = generate_qcqp(6, 2, true, 8);
  auto once = [&]() {
    ProblemSpec p = inst.to_problem(NoiseModel::gaussian(0.1));
    const SmoothingConfig cfg = SmoothingConfig::uniform(0.05, 2);
    return conex_run(p, make_schedule({ScheduleMode::kSqrtT, 4.0, 4.0, 1.0}, p, cfg, 200), cfg,
                     99);
  };
  const ConexResult a = once();
  const ConexResult b = once();
  bool same = a.x_bar == b.x_bar && a.y_last == b.y_last &&
              a.trace.records.size() == b.trace.records.size();
  for (std::size_t t = 0; same && t < a.trace.records.size(); ++t) {
    same = a.trace.records[t].objective == b.trace.records[t].objective &&
           a.trace.records[t].violation == b.trace.records[t].violation;
  }
  ok = same;
  return same ? "identical traces for a repeated seed" : "traces differ";
}

std::string convexity_check(bool& ok) {
  double worst = 1e300;
  for (int s = 0; s < 10; ++s) {
    const QcqpInstance inst = generate_qcqp(10, 2, false, 700 + s);
    const ProximalConfig pc = ProximalConfig::defaults(inst.constants(NoiseModel::none()), 1, 1, {});
    for (int i = 0; i <= inst.m; ++i) {
      const double mu = i == 0 ? pc.mu0 : pc.mu[static_cast<std::size_t>(i - 1)];
      Eigen::SelfAdjointEigenSolver<Matrix> es(2.0 * inst.A[static_cast<std::size_t>(i)],
                                               Eigen::EigenvaluesOnly);
      worst = std::min(worst, es.eigenvalues().minCoeff() + 2.0 * mu);
    }
  }
  ok = worst >= 0.0;
  return fmt::format("min lambda_min(2 A_i) + 2 mu_i = {:.3e}", worst);
}

}  // namespace

bool run_verify_suite(std::ostream& out) {
  const Check checks[] = {
      {"prox variational inequality", prox_check},
      {"normal cone vs grid search", normal_cone_check},
      {"reference KKT certificates", reference_check},
      {"smoothed gap bound", lemma4_check},
      {"oracle ledger exactness", ledger_check},
      {"seeded determinism", determinism_check},
      {"regularized subproblem convexity", convexity_check},
  };
  bool all = true;
  for (const Check& c : checks) {
    bool ok = false;
    std::string detail;
    try {
      detail = c.body(ok);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("threw: ") + e.what();
    }
    out << (ok ? "PASS " : "FAIL ") << c.name << ": " << detail << '\n';
    all = all && ok;
  }
  return all;
}

}  // namespace zoconex
