#pragma once

#include <cstdint>
#include <vector>

#include "zoconex/conex.hpp"
#include "zoconex/geometry.hpp"
#include "zoconex/problem.hpp"
#include "zoconex/smoothing.hpp"
#include "zoconex/types.hpp"

namespace zoconex {

/// Floor of the default proximal weights mu_i = max(L_i, kMuFloor).
inline constexpr double kMuFloor = 1e-6;

/// Proximal-point meta-algorithm settings.
struct ProximalConfig {
  double mu0 = 0.0;
  std::vector<double> mu;   // one per constraint
  int K = 1;                // outer iterations
  ScheduleSpec inner;       // schedule template for every subproblem
  int T = 1;                // inner iterations per subproblem

  /// mu_i = max(L_i, kMuFloor) so every 2 mu_i W-regularized f_i is convex.
  static ProximalConfig defaults(const SmoothnessConstants& constants, int K, int T,
                                 ScheduleSpec inner);
  void validate(int m) const;
};

struct KktReport {
  double stationarity = 0.0;     // d(grad f_0 + sum_i y_i grad f_i + N_X(x), 0)
  double complementarity = 0.0;  // sum_i |y_i f_i(x)|
  double violation = 0.0;        // ||[f(x)]_+||_2
  Vector dual;

  double max_residual() const;
};

/// Adds the deterministic term 2 mu_i W(x, center) to every oracle and bumps
/// L_i by 2 mu_i and M_i by 2 mu_i sup_X ||x - center||. Gradients are wrapped
/// too when present. The returned problem has a fresh ledger.
ProblemSpec regularize(const ProblemSpec& problem, const Vector& center,
                       const ProximalConfig& prox_config, const BregmanGeometry& geom);

/// KKT residuals from noiseless values and gradients.
KktReport kkt_residual(const ProblemSpec& problem, const Vector& x, const Vector& y,
                       const BregmanGeometry& geom, const Domain& domain);

/// KKT residuals at a point within delta of x: one projected Lagrangian
/// gradient step x_near = Proj_X(x - grad L(x, y) / beta) with y estimated at
/// x and beta = L_0 + sum_i y_i L_i. The report is evaluated at x_near. Both
/// duals weigh complementarity equally with stationarity, so inactive
/// constraints cannot absorb the gradient.
struct NearKkt {
  Vector point;
  double delta = 0.0;  // ||point - x||
  KktReport report;
};

NearKkt near_kkt_certificate(const ProblemSpec& problem, const Vector& x,
                             const BregmanGeometry& geom, const Domain& domain);

/// Nonnegative least-squares dual minimizing d(grad f_0 + J y + N_X(x), 0)^2
/// + complementarity_weight * sum_i (y_i f_i(x))^2, by accelerated projected
/// gradient with 1000 iterations. Weight 0 is plain stationarity fitting.
Vector estimate_dual_for_kkt(const ProblemSpec& problem, const Vector& x,
                             const BregmanGeometry& geom, const Domain& domain,
                             double complementarity_weight = 0.0);

struct OuterStep {
  Vector center;       // x_{k-1}
  Vector x;            // x_k
  RunTrace trace;      // inner run
  KktReport kkt;       // of x_k on the original problem (NaN without gradients)
  NearKkt near;        // certificate at a point near x_k
  std::uint64_t calls = 0;
};

struct MetaResult {
  Vector x_hat;        // x_{k_hat}
  int k_hat = 0;       // in 1..K
  int best_k = 0;      // argmin near-point max residual over 1..K, 0 if unavailable
  KktReport initial;   // KKT report of x_0
  NearKkt initial_near;
  std::vector<OuterStep> steps;
  bool diverged = false;
};

/// Proximal-point loop over regularized constraint-extrapolation subproblems.
/// x_0 defaults to the projection of the origin onto X.
MetaResult meta_run(ProblemSpec& problem, const ProximalConfig& prox_config,
                    const SmoothingConfig& config, std::uint64_t master_seed,
                    const ConexOptions& options = {});

}  // namespace zoconex
