#pragma once

#include <vector>

#include "zoconex/problem.hpp"
#include "zoconex/rng.hpp"
#include "zoconex/types.hpp"

namespace zoconex {

/// Radii below this are clamped to keep (F(x + nu u) - F(x)) / nu well conditioned.
inline constexpr double kMinSmoothingRadius = 1e-8;

/// Gaussian smoothing radii: nu0 for the objective, nu[i-1] for constraint i.
struct SmoothingConfig {
  double nu0 = 0.0;
  std::vector<double> nu;

  static SmoothingConfig uniform(double radius, int m) {
    return {radius, std::vector<double>(static_cast<std::size_t>(m), radius)};
  }
  /// Radius of function i (0 = objective), floored at kMinSmoothingRadius.
  double radius(int i) const;
  void validate(int m) const;
};

/// Two-point estimate G = (F(x + nu u, xi) - F(x, xi)) / nu * u and its ingredients.
struct GradientEstimate {
  Vector g;
  Vector direction;
  double value_at_shift = 0.0;
  double value_at_base = 0.0;
};

/// n independent N(0, 1) coordinates.
Vector sample_direction(int n, RngStream& stream);

/// Two-point Gaussian-smoothing gradient of oracle i at x. Costs 2 ledger calls.
/// Throws EstimatorError if either oracle value is non-finite.
GradientEstimate two_point_gradient(ProblemSpec& problem, int i, const Vector& x, double nu,
                                    RngStream& noise_stream, RngStream& direction_stream);

/// Largest radii allowed by the convex oracle-complexity analysis for horizon T.
/// The third objective term uses L_0.
SmoothingConfig select_smoothing_parameters(const SmoothnessConstants& constants, int n, int m,
                                            int T, double max_norm);

/// sigma^2_{i,nu}: bound on E||G_{i,nu} - grad f_{i,nu}||^2.
double gradient_variance_bound(double nu, double grad_lipschitz, double value_lipschitz,
                               double grad_noise, int n, double diameter);

/// sigma^2_{f,nu}: bound on E||F_nu(x, xi, u) - f_nu(x)||^2 over the m constraints.
double value_variance_bound(const SmoothnessConstants& constants, const SmoothingConfig& config,
                            int n);

/// |f_nu(x) - f(x)| <= nu^2 L n / 2.
double smoothing_bias_bound(double grad_lipschitz, double nu, int n);

}  // namespace zoconex
