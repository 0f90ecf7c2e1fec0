#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace magd {

/// Independent stream roles derived from one experiment seed.
enum class StreamRole : std::uint64_t {
  kChain = 1,
  kBatch = 2,
  kInit = 3,
  kMixing = 4,
  kNoiseCertification = 5,
  kMonteCarlo = 6,
  kProbe = 7,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based derivation: each (seed, role, index) triple maps to its own
/// engine seed, so streams can be split without sharing state.
constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamRole role,
                                    std::uint64_t index = 0) {
  return mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(role)) + index);
}

/// 64-bit engine with the few portable draws the library needs. The standard
/// distributions are avoided because their output is implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  Rng(std::uint64_t seed, StreamRole role, std::uint64_t index = 0)
      : engine_(derive_seed(seed, role, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n) from exactly one draw (multiply-high; bias below n / 2^64).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// J with P{J = j} = 2^-j, j >= 1, from one draw; capped at 64.
  int geometric_half() {
    const std::uint64_t bits = engine_();
    return bits == 0 ? 64 : std::countr_zero(bits) + 1;
  }

  /// Standard normal via Box-Muller (two uniform draws).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace magd
