#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "asa/action_space.hpp"
#include "asa/random.hpp"

namespace asa {

/// One piece of a piecewise-constant background load, active from `start`
/// until the next regime's start.
struct BackgroundRegime {
  Seconds start = 0;
  double arrivals_per_hour = 0.0;
  int min_cores = 1;
  int max_cores = 1;
  Seconds min_walltime = 60;
  Seconds max_walltime = 3600;
  /// Actual runtime is this fraction range of the requested walltime.
  double min_runtime_fraction = 0.6;
  double max_runtime_fraction = 1.0;

  bool operator==(const BackgroundRegime&) const = default;
};

struct BackgroundArrival {
  Seconds time = 0;
  int cores = 1;
  Seconds walltime = 1;
  Seconds runtime = 1;

  bool operator==(const BackgroundArrival&) const = default;
};

/// Validates a regime schedule: non-empty, first regime at 0, strictly
/// increasing starts, sane ranges, cores within `capacity`.
void validate_regimes(const std::vector<BackgroundRegime>& regimes, int capacity);

/// Lazy Poisson arrival stream with log-uniform job sizes.
class BackgroundGenerator {
 public:
  BackgroundGenerator(std::vector<BackgroundRegime> regimes, std::uint64_t seed);

  /// Next arrival, or nullopt once every remaining regime has zero rate.
  std::optional<BackgroundArrival> next();

 private:
  std::size_t regime_at(double t) const;

  std::vector<BackgroundRegime> regimes_;
  Rng rng_;
  double clock_ = 0.0;
};

/// A recorded arrival sequence, replayed identically by every model that
/// consumes it.
using BackgroundTrace = std::vector<BackgroundArrival>;

/// Arrivals strictly before `horizon`.
BackgroundTrace generate_trace(const std::vector<BackgroundRegime>& regimes, std::uint64_t seed,
                               Seconds horizon);

/// Where a ClusterModel takes its background jobs from: nothing, a live
/// generator, or a shared frozen trace.
class BackgroundSource {
 public:
  BackgroundSource() = default;
  static BackgroundSource live(std::vector<BackgroundRegime> regimes, std::uint64_t seed);
  static BackgroundSource replay(std::shared_ptr<const BackgroundTrace> trace);

  std::optional<BackgroundArrival> next();

 private:
  std::optional<BackgroundGenerator> generator_;
  std::shared_ptr<const BackgroundTrace> trace_;
  std::size_t cursor_ = 0;
};

}  // namespace asa
