#include "zoconex/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zoconex {

void NoiseModel::validate() const {
  switch (kind) {
    case NoiseKind::kNone:
      return;
    case NoiseKind::kGaussian:
      if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("gaussian noise sigma must be >= 0");
      return;
    case NoiseKind::kStudentT:
      if (!(dof > 2.0)) throw ConfigError("student-t noise needs dof > 2 for finite variance");
      if (!(scale >= 0.0) || !std::isfinite(scale)) throw ConfigError("student-t scale must be >= 0");
      return;
  }
}

double NoiseModel::draw(RngStream& rng) const {
  switch (kind) {
    case NoiseKind::kNone:
      return 0.0;
    case NoiseKind::kGaussian:
      return scale * rng.gaussian();
    case NoiseKind::kStudentT:
      return scale * rng.student_t(dof);
  }
  return 0.0;
}

double NoiseModel::stddev() const {
  switch (kind) {
    case NoiseKind::kNone:
      return 0.0;
    case NoiseKind::kGaussian:
      return scale;
    case NoiseKind::kStudentT:
      return scale * std::sqrt(dof / (dof - 2.0));
  }
  return 0.0;
}

void SmoothnessConstants::validate(std::size_t function_count) const {
  auto check = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != function_count) {
      throw ConfigError(std::string("smoothness constants: ") + name + " has " +
                        std::to_string(v.size()) + " entries, expected " +
                        std::to_string(function_count));
    }
    for (double c : v) {
      if (!std::isfinite(c) || c < 0.0) {
        throw ConfigError(std::string("smoothness constants: ") + name + " must be finite and >= 0");
      }
    }
  };
  check(grad_lipschitz, "L");
  check(value_lipschitz, "M");
  check(grad_noise, "sigma");
  check(value_noise, "sigma_f");
}

AggregateConstants aggregate_constants(const SmoothnessConstants& constants) {
  double m2 = 0.0;
  double l2 = 0.0;
  for (std::size_t i = 1; i < constants.value_lipschitz.size(); ++i) {
    m2 += constants.value_lipschitz[i] * constants.value_lipschitz[i];
  }
  for (std::size_t i = 1; i < constants.grad_lipschitz.size(); ++i) {
    l2 += constants.grad_lipschitz[i] * constants.grad_lipschitz[i];
  }
  return {std::sqrt(m2), std::sqrt(l2)};
}

void OracleLedger::record(std::size_t function, std::uint64_t calls) {
  counts_.at(function) += calls;
  total_ += calls;
}

void OracleLedger::reset() {
  std::fill(counts_.begin(), counts_.end(), 0);
  total_ = 0;
}

std::uint64_t ledger_expected_calls(int m, int T) {
  const auto per_round = static_cast<std::uint64_t>(2 + 4 * m);
  return per_round * static_cast<std::uint64_t>(T) + per_round;
}

NoisyPair draw_noisy_pair(const StochasticOracle& oracle, const Vector& x, const Vector& x_shifted,
                          RngStream& noise_stream) {
  require_dimension(x_shifted.size(), x.size(), "draw_noisy_pair shifted point");
  const double e_shift = oracle.noise.draw(noise_stream);
  const double e_base =
      oracle.noise.coupling == NoiseCoupling::kCommon ? e_shift : oracle.noise.draw(noise_stream);
  return {oracle.evaluate(x_shifted, e_shift), oracle.evaluate(x, e_base)};
}

ProblemSpec::ProblemSpec(int dimension, std::vector<StochasticOracle> oracles, Domain domain,
                         SmoothnessConstants constants)
    : dimension_(dimension),
      oracles_(std::move(oracles)),
      domain_(std::move(domain)),
      constants_(std::move(constants)),
      ledger_(oracles_.size()) {
  if (dimension_ < 1) throw ConfigError("problem dimension must be >= 1");
  if (oracles_.empty()) throw ConfigError("problem needs an objective oracle");
  require_dimension(domain_.dimension(), dimension_, "problem domain");
  for (const StochasticOracle& o : oracles_) {
    if (!o.value) throw ConfigError("oracle without an evaluation function");
    o.noise.validate();
  }
  constants_.validate(oracles_.size());
}

NoisyPair ProblemSpec::sample_pair(int i, const Vector& x, const Vector& x_shifted,
                                   RngStream& noise_stream) {
  require_dimension(x.size(), dimension_, "oracle point");
  NoisyPair p = draw_noisy_pair(oracle(i), x, x_shifted, noise_stream);
  ledger_.record(static_cast<std::size_t>(i), 2);
  return p;
}

bool ProblemSpec::has_noiseless() const {
  for (const StochasticOracle& o : oracles_) {
    if (!o.has_noiseless) return false;
  }
  return true;
}

bool ProblemSpec::has_gradients() const {
  for (const StochasticOracle& o : oracles_) {
    if (!o.gradient) return false;
  }
  return true;
}

Vector ProblemSpec::constraint_values(const Vector& x) const {
  Vector f(constraint_count());
  for (int i = 1; i <= constraint_count(); ++i) f[i - 1] = value(i, x);
  return f;
}

double ProblemSpec::violation(const Vector& x) const {
  return project_nonneg(constraint_values(x)).norm();
}

}  // namespace zoconex
