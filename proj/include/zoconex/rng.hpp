#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <utility>

namespace zoconex {

/// Purpose of a random stream. Each (role, index) pair owns an independent
/// engine so that, e.g., the constraint-linearization draws never share state
/// with the draws used by the primal gradient.
enum class StreamRole : std::uint32_t {
  kNoise = 1,        // xi, per function
  kDirection = 2,    // u, per function
  kBarNoise = 3,     // xi-bar, per constraint
  kBarDirection = 4, // u-bar, per constraint
  kTrial = 5,
  kInstance = 6,
  kDiagnostic = 7,
  kOuter = 8,
};

/// SplitMix64 finalizer; used to derive child seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamRole role, std::uint64_t index) {
  std::uint64_t h = mix_seed(master);
  h = mix_seed(h ^ (static_cast<std::uint64_t>(role) << 56));
  return mix_seed(h ^ index);
}

/// A replayable random stream: one 64-bit Mersenne twister plus a cached
/// normal distribution. Construct two streams from the same seed and they
/// produce identical sequences.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double student_t(double dof) { return std::student_t_distribution<double>(dof)(engine_); }
  std::uint64_t next_u64() { return engine_(); }
  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Lazily creates named streams from one master seed.
class StreamBank {
 public:
  explicit StreamBank(std::uint64_t master_seed) : master_(master_seed) {}

  RngStream& stream(StreamRole role, std::uint64_t index = 0) {
    auto key = std::make_pair(static_cast<std::uint32_t>(role), index);
    auto it = streams_.find(key);
    if (it == streams_.end()) {
      it = streams_.emplace(key, RngStream(derive_seed(master_, role, index))).first;
    }
    return it->second;
  }

  std::uint64_t master_seed() const { return master_; }

 private:
  std::uint64_t master_;
  std::map<std::pair<std::uint32_t, std::uint64_t>, RngStream> streams_;
};

}  // namespace zoconex
