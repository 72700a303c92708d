#pragma once

#include <cstdint>
#include <random>

namespace mtrl {

/// Purposes that get their own random stream. Streams derived from the same
/// master seed but different purposes or indices are statistically independent.
enum class Stream : std::uint64_t {
  kEnvironment = 1,
  kRewardFree = 2,
  kCoverage = 3,
  kDesignNet = 4,
  kRewardSamples = 5,
  kThompson = 6,
  kProbe = 7,
  kTrial = 8,
  kRegretEpisodes = 9,
  kObservationNoise = 10,
};

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based derivation: the same (master, purpose, index) always yields
/// the same seed.
std::uint64_t derive_seed(std::uint64_t master, Stream purpose,
                          std::uint64_t index = 0);

inline Engine make_engine(std::uint64_t master, Stream purpose,
                          std::uint64_t index = 0) {
  return Engine(derive_seed(master, purpose, index));
}

/// Uniform double in [0, 1) built from the top 53 bits, so results do not
/// depend on the standard library's distribution implementation.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (polar form avoided to keep the number of
/// engine draws fixed at two per call).
double standard_normal(Engine& rng);

}  // namespace mtrl
