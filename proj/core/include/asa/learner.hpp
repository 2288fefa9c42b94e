#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "asa/action_space.hpp"
#include "asa/random.hpp"

namespace asa {

/// How a learner turns its state into an estimate.
struct Policy {
  enum class Kind { Default, Tuned, Greedy };

  Kind kind = Kind::Default;
  /// Replay count for Tuned; ignored otherwise.
  int repetitions = 0;

  static Policy default_policy() { return {}; }
  static Policy tuned(int repetitions);
  static Policy greedy() { return {Kind::Greedy, 0}; }

  /// Parses "default", "greedy" or "tuned:<R>" (bare "tuned" means R = 50).
  static Policy parse(std::string_view text);
  std::string name() const;

  bool operator==(const Policy&) const = default;
};

/// Non-increasing learning-rate sequence keyed on completed rounds:
///   gamma(eta) = max(floor, min(scale, scale * sqrt(ln m / max(1, eta))))
/// or a fixed value when `constant` is set.
struct GammaSchedule {
  double scale = 6.0;
  double floor = 2.0;
  std::optional<double> constant;

  static GammaSchedule fixed(double value);
  double at(std::uint64_t completed_rounds, std::size_t actions) const;

  bool operator==(const GammaSchedule&) const = default;
};

struct Estimate {
  ActionIndex action;
  Seconds wait;
};

struct RegretCheck {
  double lhs;
  double rhs;
  bool holds;
};

/// Complete learner state. Exposed so that it can be persisted, inspected by
/// tests and handed between sequential runs.
struct LearnerState {
  ActionGrid grid;
  std::vector<double> p;
  /// Loss accumulated per action within the open round.
  std::vector<double> round_losses;
  /// Hindsight loss per action. Every step scored against an observed wait
  /// charges each action the loss it would have incurred; bare record_loss()
  /// calls can only charge the sampled action.
  std::vector<double> per_action_cumulative;
  /// Completed rounds, eta(t).
  std::uint64_t eta = 0;
  /// Loss events recorded, t.
  std::uint64_t step = 0;
  /// Realized loss of the sampled actions.
  double cumulative_loss = 0.0;
  /// Most recent estimate not yet scored.
  std::optional<ActionIndex> pending;
  GammaSchedule gamma;
  std::uint64_t seed = 0;
  Rng rng;
};

/// Exponential-weights waiting-time learner.
///
/// Losses are gathered in rounds; a round closes as soon as some action's
/// accumulated round loss exceeds 1, at which point every weight is scaled by
/// exp(-gamma * round_loss) and renormalized. Single owner, not thread-safe.
class Learner {
 public:
  /// Uniform start. Throws std::invalid_argument if the grid has fewer than
  /// two alternatives.
  Learner(ActionGrid grid, std::uint64_t seed, GammaSchedule gamma = {});

  /// Adopts an existing state after validating its shape and simplex.
  static Learner from_state(LearnerState state);

  const LearnerState& state() const noexcept { return s_; }
  const ActionGrid& grid() const noexcept { return s_.grid; }
  double current_gamma() const { return s_.gamma.at(s_.eta, s_.grid.size()); }

  /// Default/Tuned draw from p; Greedy takes the argmin of the hindsight
  /// loss (ties to the shorter wait) and consumes no randomness.
  ActionIndex sample_action(const Policy& policy);

  /// Adds one loss in [0, 1] for `action`; closes the round when needed.
  void record_loss(ActionIndex action, double loss_value);

  /// Scores the pending estimate against the realized wait. Tuned(R) then
  /// replays R sample/score/update steps against the same wait.
  /// Throws std::logic_error when no estimate is pending.
  void observe_true_wait(Seconds true_wait, const Policy& policy);

  /// Same as above for an explicitly named earlier estimate. Used when several
  /// estimates from one learner are in flight at once.
  void observe_true_wait(ActionIndex estimated, Seconds true_wait, const Policy& policy);

  /// Samples per policy and remembers the choice as pending.
  Estimate estimate(const Policy& policy);

  /// lhs = realized loss - min_a hindsight loss;
  /// rhs = 4 eta + ln m + sqrt(2 t ln(m / delta)).
  RegretCheck regret_bound_check(double delta) const;

  nlohmann::json to_json() const;
  static Learner from_json(const nlohmann::json& doc);

  static constexpr int kStateVersion = 1;

 private:
  explicit Learner(LearnerState state);

  void score_step(ActionIndex action, Seconds true_wait);
  void accumulate(ActionIndex action, double loss_value);
  void close_round();

  LearnerState s_;
};

}  // namespace asa
