#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "zoconex/geometry.hpp"
#include "zoconex/rng.hpp"
#include "zoconex/types.hpp"

namespace zoconex {

enum class NoiseKind { kNone, kGaussian, kStudentT };

/// How the two evaluations of a two-point pair share noise. kIndependent draws
/// a separate additive term for each point; kCommon adds the same term to both,
/// so it cancels in differences.
enum class NoiseCoupling { kIndependent, kCommon };

/// Zero-mean additive noise on oracle values.
struct NoiseModel {
  NoiseKind kind = NoiseKind::kNone;
  double scale = 0.0;  // Gaussian sigma, or Student-t scale
  double dof = 0.0;    // Student-t degrees of freedom, > 2
  NoiseCoupling coupling = NoiseCoupling::kIndependent;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma, NoiseCoupling c = NoiseCoupling::kIndependent) {
    return {NoiseKind::kGaussian, sigma, 0.0, c};
  }
  static NoiseModel student_t(double dof, double scale,
                              NoiseCoupling c = NoiseCoupling::kIndependent) {
    return {NoiseKind::kStudentT, scale, dof, c};
  }

  void validate() const;
  double draw(RngStream& rng) const;
  /// Standard deviation of one draw.
  double stddev() const;
};

/// One stochastic zeroth-order oracle F(x, xi) with E[F(x, xi)] = f(x).
struct StochasticOracle {
  std::function<double(const Vector&)> value;       // noiseless f, diagnostics only
  std::function<Vector(const Vector&)> gradient;    // optional, diagnostics only
  NoiseModel noise;
  bool has_noiseless = true;

  double evaluate(const Vector& x, double noise_draw) const { return value(x) + noise_draw; }
};

/// Per-function constants L_i, M_i, sigma_i, sigma_{f_i}, index 0 = objective.
struct SmoothnessConstants {
  std::vector<double> grad_lipschitz;   // L_i
  std::vector<double> value_lipschitz;  // M_i
  std::vector<double> grad_noise;       // sigma_i
  std::vector<double> value_noise;      // sigma_{f_i}

  std::size_t size() const { return grad_lipschitz.size(); }
  /// Checks m+1 entries per list, all finite and non-negative.
  void validate(std::size_t function_count) const;
};

struct AggregateConstants {
  double value_lipschitz;  // M_f
  double grad_lipschitz;   // L_f
};

AggregateConstants aggregate_constants(const SmoothnessConstants& constants);

class OracleLedger {
 public:
  explicit OracleLedger(std::size_t function_count = 0) : counts_(function_count, 0) {}

  void record(std::size_t function, std::uint64_t calls);
  std::uint64_t total() const { return total_; }
  std::uint64_t calls(std::size_t function) const { return counts_.at(function); }
  std::size_t function_count() const { return counts_.size(); }
  void reset();

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Exact oracle-call count of a SZO-ConEX run with m constraints and T iterations.
std::uint64_t ledger_expected_calls(int m, int T);

struct NoisyPair {
  double at_shifted;
  double at_base;
};

/// F(x_shifted, xi) and F(x, xi) under one noise draw xi. Does not touch a ledger.
NoisyPair draw_noisy_pair(const StochasticOracle& oracle, const Vector& x, const Vector& x_shifted,
                          RngStream& noise_stream);

/// min f_0(x) over X subject to f_i(x) <= 0, accessed only through noisy values.
class ProblemSpec {
 public:
  ProblemSpec(int dimension, std::vector<StochasticOracle> oracles, Domain domain,
              SmoothnessConstants constants);

  int dimension() const { return dimension_; }
  int constraint_count() const { return static_cast<int>(oracles_.size()) - 1; }
  const StochasticOracle& oracle(int i) const { return oracles_.at(static_cast<std::size_t>(i)); }
  const std::vector<StochasticOracle>& oracles() const { return oracles_; }
  const Domain& domain() const { return domain_; }
  const SmoothnessConstants& constants() const { return constants_; }

  OracleLedger& ledger() { return ledger_; }
  const OracleLedger& ledger() const { return ledger_; }

  /// draw_noisy_pair on oracle i, charged to the ledger (2 calls).
  NoisyPair sample_pair(int i, const Vector& x, const Vector& x_shifted, RngStream& noise_stream);

  bool has_noiseless() const;
  bool has_gradients() const;
  /// Noiseless f_i(x).
  double value(int i, const Vector& x) const { return oracle(i).value(x); }
  /// Noiseless constraint vector [f_1(x), ..., f_m(x)].
  Vector constraint_values(const Vector& x) const;
  /// ||[f(x)]_+||_2 from noiseless values.
  double violation(const Vector& x) const;

 private:
  int dimension_;
  std::vector<StochasticOracle> oracles_;
  Domain domain_;
  SmoothnessConstants constants_;
  OracleLedger ledger_;
};

}  // namespace zoconex
