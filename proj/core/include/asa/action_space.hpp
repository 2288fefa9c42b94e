#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace asa {

/// Simulated time and durations, in whole seconds.
using Seconds = std::int64_t;
/// Index into an ActionGrid.
using ActionIndex = std::size_t;

/// The discretized waiting-time alternatives a learner chooses among.
///
/// Values are strictly increasing positive durations in seconds. Immutable
/// after construction.
class ActionGrid {
 public:
  /// Throws std::invalid_argument unless values are non-empty, positive and
  /// strictly increasing.
  explicit ActionGrid(std::vector<Seconds> values);

  std::size_t size() const noexcept { return values_.size(); }
  Seconds operator[](ActionIndex a) const { return values_.at(a); }
  std::span<const Seconds> values() const noexcept { return values_; }

  bool operator==(const ActionGrid&) const = default;

 private:
  std::vector<Seconds> values_;
};

/// The 53-value grid spanning 10 s to 100 000 s, densest in the tens and
/// hundreds of seconds:
///   10..90 step 10, 100..950 step 50, 1000..8500 step 500,
///   10000..90000 step 10000, 100000.
ActionGrid canonical_grid();

/// Index of the grid value nearest to true_wait; ties go to the smaller value.
/// Throws std::invalid_argument for a negative wait.
ActionIndex closest_action(const ActionGrid& grid, Seconds true_wait);

/// Binary loss: 0 when `action` is the closest alternative to true_wait,
/// 1 otherwise.
double loss(const ActionGrid& grid, ActionIndex action, Seconds true_wait);

}  // namespace asa
