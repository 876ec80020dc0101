#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "zoconex/geometry.hpp"
#include "zoconex/problem.hpp"
#include "zoconex/rng.hpp"
#include "zoconex/smoothing.hpp"
#include "zoconex/types.hpp"

namespace zoconex {

/// Per-iteration step schedules of the constraint-extrapolation method.
/// Index t holds gamma_t, theta_t, eta_t, tau_t for t = 0..T-1.
struct ConexParams {
  std::vector<double> gamma;
  std::vector<double> theta;
  std::vector<double> eta;
  std::vector<double> tau;

  /// gamma_t = theta_t = 1, eta_t = eta, tau_t = tau.
  static ConexParams constant(int T, double eta, double tau);

  int iterations() const { return static_cast<int>(eta.size()); }

  /// Throws ConfigError unless gamma_t theta_t = gamma_{t-1},
  /// gamma_t tau_t <= gamma_{t-1} tau_{t-1}, gamma_t eta_t <= gamma_{t-1} eta_{t-1}
  /// and eta_t > min_eta for every t.
  void validate(double min_eta) const;
};

enum class ScheduleMode {
  kExplicit,  // eta_t = eta, tau_t = tau
  kTheorem1,  // constants from the convex complexity analysis
  kSqrtT,     // eta_t = L_0 + L_f + eta * sqrt(T), tau_t = tau * sqrt(T)
};

struct ScheduleSpec {
  ScheduleMode mode = ScheduleMode::kTheorem1;
  double eta = 0.0;
  double tau = 0.0;
  /// Stand-in for the unknown ||y*||_2 in the theorem-1 schedule.
  double dual_norm_bound = 1.0;
};

/// Raw (eta, tau) of the theorem-1 schedule given the aggregated variance terms.
struct Theorem1Steps {
  double eta;
  double tau;
};

Theorem1Steps theorem1_steps(int T, double diameter, double h_star, double sigma0_sq,
                             double sigma_nu_norm, double sigma_xf, double value_lipschitz_f);

/// Constant schedule eta_t = L_0 + L_f + eta, tau_t = tau with eta, tau from the
/// convex complexity analysis.
ConexParams theorem1_schedule(const SmoothnessConstants& constants, double diameter, int T,
                              double dual_norm_bound, const SmoothingConfig& config, int n);

ConexParams make_schedule(const ScheduleSpec& spec, const ProblemSpec& problem,
                          const SmoothingConfig& config, int T);

/// Stochastic linearization l_F(z) = values + grads^T (z - base_point) of the
/// constraints, built at base_point from one (xi-bar, u-bar) draw per constraint.
struct Linearization {
  Vector values;     // F_nu(x, xi-bar, u-bar), length m
  Matrix grads;      // n x m, column i-1 = G_{i,nu}(x, xi-bar, u-bar)
  Vector base_point;

  Vector evaluate(const Vector& z) const;
};

Linearization build_linearization(ProblemSpec& problem, const Vector& x,
                                  const SmoothingConfig& config, StreamBank& streams);

/// s = (1 + theta) * at_curr - theta * at_prev.
Vector extrapolate(const Vector& at_curr, const Vector& at_prev, double theta);
Vector extrapolate(const Linearization& lin_curr, const Vector& x_curr,
                   const Linearization& lin_prev, const Vector& x_prev, double theta);

/// y+ = [y + s / tau]_+.
Vector dual_update(const Vector& y, const Vector& s, double tau);

struct PrimalStep {
  Vector x_next;
  Vector direction;            // G_0 + sum_i y_i G_i
  double objective_estimate;   // F_0(x, xi)
};

/// Prox step on the stochastic Lagrangian gradient at x. Costs 2(m+1) calls.
PrimalStep primal_update(ProblemSpec& problem, const BregmanGeometry& geom, const Vector& x,
                         const Vector& y_next, const SmoothingConfig& config, double eta,
                         StreamBank& streams);

/// Running gamma-weighted mean of iterates.
class IterateAverage {
 public:
  explicit IterateAverage(int n = 0) : sum_(Vector::Zero(n)) {}

  void add(const Vector& x, double gamma);
  double weight() const { return weight_; }
  /// Throws Error when no weight has been accumulated.
  Vector mean() const;

 private:
  Vector sum_;
  double weight_ = 0.0;
};

struct TraceRecord {
  int t = 0;
  std::uint64_t calls = 0;  // cumulative oracle calls after iteration t
  double objective = 0.0;   // f_0 of the running average (noisy F_0 estimate for black boxes)
  double violation = 0.0;   // ||[f(x_bar)]_+||_2 (noisy estimate for black boxes)
  double dual_norm = 0.0;   // ||y^(t+1)||_2
};

struct RunTrace {
  std::vector<TraceRecord> records;  // one per iteration
  TraceRecord initial;               // starting point, after the initialization round
  bool noiseless = true;             // records hold noiseless diagnostics
  bool diverged = false;
  int diverged_at = -1;
};

struct ConexOptions {
  std::optional<Vector> x0;  // default: projection of the origin onto X
  double divergence_threshold = 1e12;
  bool record_trace = true;
};

struct ConexResult {
  Vector x_bar;
  Vector y_last;
  RunTrace trace;
};

/// Stochastic zeroth-order constraint extrapolation. Never throws on
/// divergence: non-finite or exploding iterates end the run and set
/// trace.diverged, remaining records are NaN.
ConexResult conex_run(ProblemSpec& problem, const ConexParams& params,
                      const SmoothingConfig& config, std::uint64_t master_seed,
                      const ConexOptions& options = {});

}  // namespace zoconex
