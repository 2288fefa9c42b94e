#include "asa/background.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asa {

void validate_regimes(const std::vector<BackgroundRegime>& regimes, int capacity) {
  if (regimes.empty()) return;
  if (regimes.front().start != 0) throw std::invalid_argument("first background regime must start at 0");
  for (std::size_t i = 0; i < regimes.size(); ++i) {
    const auto& r = regimes[i];
    if (i > 0 && r.start <= regimes[i - 1].start) {
      throw std::invalid_argument("background regime starts must be strictly increasing");
    }
    if (r.arrivals_per_hour < 0.0) throw std::invalid_argument("arrival rate must be >= 0");
    if (r.min_cores < 1 || r.max_cores < r.min_cores || r.max_cores > capacity) {
      throw std::invalid_argument("background core range must satisfy 1 <= min <= max <= capacity");
    }
    if (r.min_walltime < 1 || r.max_walltime < r.min_walltime) {
      throw std::invalid_argument("background walltime range must satisfy 1 <= min <= max");
    }
    if (!(r.min_runtime_fraction > 0.0) || r.max_runtime_fraction > 1.0 ||
        r.max_runtime_fraction < r.min_runtime_fraction) {
      throw std::invalid_argument("runtime fraction range must lie in (0, 1]");
    }
  }
}

BackgroundGenerator::BackgroundGenerator(std::vector<BackgroundRegime> regimes, std::uint64_t seed)
    : regimes_(std::move(regimes)), rng_(seed) {
  if (!regimes_.empty() && regimes_.front().start != 0) {
    throw std::invalid_argument("first background regime must start at 0");
  }
}

std::size_t BackgroundGenerator::regime_at(double t) const {
  std::size_t i = 0;
  while (i + 1 < regimes_.size() && static_cast<double>(regimes_[i + 1].start) <= t) ++i;
  return i;
}

std::optional<BackgroundArrival> BackgroundGenerator::next() {
  while (!regimes_.empty()) {
    const std::size_t i = regime_at(clock_);
    const auto& r = regimes_[i];
    const bool has_next = i + 1 < regimes_.size();
    const double boundary = has_next ? static_cast<double>(regimes_[i + 1].start) : 0.0;
    if (r.arrivals_per_hour <= 0.0) {
      if (!has_next) return std::nullopt;
      clock_ = boundary;
      continue;
    }
    const double candidate = clock_ + rng_.exponential(r.arrivals_per_hour / 3600.0);
    if (has_next && candidate >= boundary) {
      // Memoryless: restart the draw at the boundary under the next rate.
      clock_ = boundary;
      continue;
    }
    clock_ = candidate;
    BackgroundArrival a;
    a.time = static_cast<Seconds>(std::floor(clock_));
    a.cores = std::clamp(static_cast<int>(std::floor(rng_.log_uniform(r.min_cores, r.max_cores + 1.0))),
                         r.min_cores, r.max_cores);
    a.walltime = std::clamp(static_cast<Seconds>(std::llround(rng_.log_uniform(
                                static_cast<double>(r.min_walltime), static_cast<double>(r.max_walltime)))),
                            r.min_walltime, r.max_walltime);
    const double fraction = rng_.uniform(r.min_runtime_fraction, r.max_runtime_fraction);
    a.runtime = std::clamp<Seconds>(static_cast<Seconds>(std::llround(fraction * static_cast<double>(a.walltime))),
                                    1, a.walltime);
    return a;
  }
  return std::nullopt;
}

BackgroundTrace generate_trace(const std::vector<BackgroundRegime>& regimes, std::uint64_t seed,
                               Seconds horizon) {
  BackgroundGenerator gen(regimes, seed);
  BackgroundTrace trace;
  while (auto a = gen.next()) {
    if (a->time >= horizon) break;
    trace.push_back(*a);
  }
  return trace;
}

BackgroundSource BackgroundSource::live(std::vector<BackgroundRegime> regimes, std::uint64_t seed) {
  BackgroundSource s;
  s.generator_.emplace(std::move(regimes), seed);
  return s;
}

BackgroundSource BackgroundSource::replay(std::shared_ptr<const BackgroundTrace> trace) {
  BackgroundSource s;
  s.trace_ = std::move(trace);
  return s;
}

std::optional<BackgroundArrival> BackgroundSource::next() {
  if (generator_) return generator_->next();
  if (trace_ && cursor_ < trace_->size()) return (*trace_)[cursor_++];
  return std::nullopt;
}

}  // namespace asa
