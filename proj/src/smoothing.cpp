#include "zoconex/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace zoconex {

double SmoothingConfig::radius(int i) const {
  const double r = i == 0 ? nu0 : nu.at(static_cast<std::size_t>(i - 1));
  return std::max(r, kMinSmoothingRadius);
}

void SmoothingConfig::validate(int m) const {
  if (static_cast<int>(nu.size()) != m) {
    throw ConfigError("smoothing config has " + std::to_string(nu.size()) +
                      " constraint radii, expected " + std::to_string(m));
  }
  auto ok = [](double r) { return std::isfinite(r) && r > 0.0; };
  if (!ok(nu0) || !std::all_of(nu.begin(), nu.end(), ok)) {
    throw ConfigError("smoothing radii must be finite and > 0");
  }
}

Vector sample_direction(int n, RngStream& stream) {
  Vector u(n);
  for (int j = 0; j < n; ++j) u[j] = stream.gaussian();
  return u;
}

GradientEstimate two_point_gradient(ProblemSpec& problem, int i, const Vector& x, double nu,
                                    RngStream& noise_stream, RngStream& direction_stream) {
  if (!(nu > 0.0)) throw ConfigError("two_point_gradient requires nu > 0");
  nu = std::max(nu, kMinSmoothingRadius);
  GradientEstimate est;
  est.direction = sample_direction(problem.dimension(), direction_stream);
  const Vector shifted = x + nu * est.direction;
  const NoisyPair pair = problem.sample_pair(i, x, shifted, noise_stream);
  if (!std::isfinite(pair.at_shifted)) {
    throw EstimatorError("oracle " + std::to_string(i) + " returned a non-finite value", shifted);
  }
  if (!std::isfinite(pair.at_base)) {
    throw EstimatorError("oracle " + std::to_string(i) + " returned a non-finite value", x);
  }
  est.value_at_shift = pair.at_shifted;
  est.value_at_base = pair.at_base;
  est.g = ((pair.at_shifted - pair.at_base) / nu) * est.direction;
  return est;
}

namespace {

double safe_inv(double denom) {
  return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
}

}  // namespace

SmoothingConfig select_smoothing_parameters(const SmoothnessConstants& constants, int n, int m,
                                            int T, double max_norm) {
  if (T < 1) throw ConfigError("select_smoothing_parameters requires T >= 1");
  constants.validate(static_cast<std::size_t>(m + 1));
  const double dn = n;
  const double dm = m;
  const double sqrt_t = std::sqrt(static_cast<double>(T));
  const double common = 2.0 / std::pow(dn + 3.0, 1.5);
  const double n6 = std::pow(dn + 6.0, 1.5);

  const double l0 = constants.grad_lipschitz[0];
  SmoothingConfig cfg;
  cfg.nu0 = std::min({safe_inv(std::sqrt(2.0 * l0 * dn * sqrt_t)), common, safe_inv(l0 * n6)});
  cfg.nu.resize(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) {
    const double li = constants.grad_lipschitz[static_cast<std::size_t>(i)];
    const double mi = constants.value_lipschitz[static_cast<std::size_t>(i)];
    cfg.nu[static_cast<std::size_t>(i - 1)] = std::min({
        common,
        safe_inv(2.0 * mi * std::sqrt((dn + 2.0) * dm)),
        safe_inv(std::sqrt(li * dn * std::sqrt(dm))),
        safe_inv(std::sqrt(2.0 * li * dn * max_norm * std::sqrt(static_cast<double>(T) * dm))),
        safe_inv(li * n6 * std::sqrt(dm)),
    });
  }
  return cfg;
}

double gradient_variance_bound(double nu, double grad_lipschitz, double value_lipschitz,
                               double grad_noise, int n, double diameter) {
  const double dn = n;
  const double b_tilde =
      0.5 * nu * grad_lipschitz * std::pow(dn + 3.0, 1.5) + grad_lipschitz * diameter + value_lipschitz;
  return nu * nu * grad_lipschitz * grad_lipschitz * std::pow(dn + 6.0, 3.0) +
         10.0 * (dn + 4.0) * (grad_noise * grad_noise + b_tilde * b_tilde);
}

double value_variance_bound(const SmoothnessConstants& constants, const SmoothingConfig& config,
                            int n) {
  const double dn = n;
  double total = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < config.nu.size(); ++i) {
    const double nu = config.nu[i];
    const double mi = constants.value_lipschitz.at(i + 1);
    const double li = constants.grad_lipschitz.at(i + 1);
    const double sf = constants.value_noise.at(i + 1);
    total += 4.0 * (dn + 2.0) * mi * mi * nu * nu + li * li * std::pow(nu, 4) * dn * dn;
    noise += sf * sf;
  }
  return total + 2.0 * noise;
}

double smoothing_bias_bound(double grad_lipschitz, double nu, int n) {
  return 0.5 * nu * nu * grad_lipschitz * n;
}

}  // namespace zoconex
