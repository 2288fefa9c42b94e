#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace asa {

/// SplitMix64 finalizer over (seed, stream). Used to derive independent
/// generator seeds for sub-streams (background load, learners, oracle levels).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic random source.
///
/// Wraps std::mt19937_64 and derives every variate from raw 64-bit draws with
/// explicit transforms, so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi);
  /// Exponential variate with the given rate (events per unit).
  double exponential(double rate);
  /// Log-uniform on [lo, hi), lo > 0.
  double log_uniform(double lo, double hi);

  /// Textual engine state, round-trips through deserialize().
  std::string serialize() const;
  static Rng deserialize(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace asa
