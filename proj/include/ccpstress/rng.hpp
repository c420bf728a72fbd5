#pragma once

#include <cmath>
#include <cstdint>

namespace ccps {

// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's fixed-increment variant).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based splittable random stream. Each stream is fully determined
/// by a 64-bit key; substreams are derived from (master seed, realization,
/// tag) so that parallel execution order cannot affect any draw.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  static std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t realization,
                                  std::uint64_t tag) {
    std::uint64_t k = mix64(master_seed ^ 0x43D0697358A9A3E5ull);
    k = mix64(k ^ (0x9E3779B97F4A7C15ull * (realization + 1)));
    k = mix64(k ^ (0xC2B2AE3D27D4EB4Full * (tag + 1)));
    return k;
  }

  static RngStream derive(std::uint64_t master_seed, std::uint64_t realization,
                          std::uint64_t tag) {
    return RngStream(derive_key(master_seed, realization, tag));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller; consumes two uniforms per call, no cached spare.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  /// Poisson with mean one, by CDF inversion.
  int poisson_unit() {
    double u = uniform();
    double p = std::exp(-1.0);
    double cum = p;
    int k = 0;
    while (u > cum && k < 64) {
      ++k;
      p /= k;
      cum += p;
    }
    return k;
  }

 private:
  std::uint64_t state_;
};

// Substream tags used by the simulation pipeline.
inline constexpr std::uint64_t kTagNetwork = 1;
inline constexpr std::uint64_t kTagShock = 2;
inline constexpr std::uint64_t kTagSynthetic = 3;
inline constexpr std::uint64_t kTagSweepCell = 4;

}  // namespace ccps
