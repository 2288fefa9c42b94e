#include "asa/action_space.hpp"

#include <algorithm>
#include <stdexcept>

namespace asa {

ActionGrid::ActionGrid(std::vector<Seconds> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("action grid must not be empty");
  if (values_.front() <= 0) throw std::invalid_argument("action grid values must be positive");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] <= values_[i - 1]) {
      throw std::invalid_argument("action grid values must be strictly increasing");
    }
  }
}

ActionGrid canonical_grid() {
  std::vector<Seconds> v;
  v.reserve(53);
  for (Seconds s = 10; s <= 90; s += 10) v.push_back(s);
  for (Seconds s = 100; s <= 950; s += 50) v.push_back(s);
  for (Seconds s = 1000; s <= 8500; s += 500) v.push_back(s);
  for (Seconds s = 10000; s <= 90000; s += 10000) v.push_back(s);
  v.push_back(100000);
  return ActionGrid(std::move(v));
}

ActionIndex closest_action(const ActionGrid& grid, Seconds true_wait) {
  if (true_wait < 0) throw std::invalid_argument("true wait must be non-negative");
  const auto values = grid.values();
  const auto it = std::lower_bound(values.begin(), values.end(), true_wait);
  if (it == values.begin()) return 0;
  if (it == values.end()) return values.size() - 1;
  const auto upper = static_cast<ActionIndex>(it - values.begin());
  const ActionIndex lower = upper - 1;
  // Equal distance resolves to the shorter wait.
  return (*it - true_wait < true_wait - values[lower]) ? upper : lower;
}

double loss(const ActionGrid& grid, ActionIndex action, Seconds true_wait) {
  if (action >= grid.size()) throw std::out_of_range("action index out of range");
  return action == closest_action(grid, true_wait) ? 0.0 : 1.0;
}

}  // namespace asa
