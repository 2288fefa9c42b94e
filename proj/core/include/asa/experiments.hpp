#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "asa/cluster.hpp"
#include "asa/learner.hpp"
#include "asa/metrics.hpp"
#include "asa/scenario.hpp"

namespace asa {

/// Piecewise-constant true waiting time over learner iterations.
class OracleSchedule {
 public:
  /// Throws std::invalid_argument unless the first point is at iteration 0,
  /// iterations strictly increase and waits are >= 0.
  explicit OracleSchedule(std::vector<std::pair<int, Seconds>> points);

  Seconds at(int iteration) const;
  const std::vector<std::pair<int, Seconds>>& points() const noexcept { return points_; }

 private:
  std::vector<std::pair<int, Seconds>> points_;
};

/// Levels drawn log-uniform from [lo, hi]; consecutive levels always map to
/// different grid actions so every changepoint moves the optimum.
OracleSchedule random_oracle_schedule(const ActionGrid& grid, std::uint64_t seed, const std::vector<int>& changepoints,
                                      double lo = 30.0, double hi = 50000.0);
/// Fixed levels from the config when given, random ones otherwise.
OracleSchedule oracle_schedule(const ConvergenceConfig& cfg, const ActionGrid& grid, std::uint64_t seed);

/// One learner run against an oracle. Index i holds iteration i.
struct ConvergenceSeries {
  std::uint64_t seed = 0;
  Policy policy;
  std::vector<ActionIndex> actions;
  std::vector<Seconds> estimates;
  std::vector<Seconds> true_waits;
  std::vector<double> losses;
  /// Probability on the zero-loss action after the iteration's update.
  std::vector<double> p_best;
};

ConvergenceSeries run_convergence_series(const ActionGrid& grid, const OracleSchedule& oracle, const Policy& policy,
                                         std::uint64_t learner_seed, int iterations, GammaSchedule gamma = {});

/// Per segment: iterations until the mode of the last `window` actions
/// (ties to the shorter wait) equals the segment's optimum, counting the
/// first iteration as 1. A segment that never gets there reports its length
/// plus one.
std::vector<int> reconvergence_times(const ConvergenceSeries& s, const OracleSchedule& oracle,
                                     const ActionGrid& grid, int window);

/// Whether the selected action stayed fixed for the whole segment following
/// the first downward changepoint. nullopt when no changepoint goes down.
std::optional<bool> frozen_after_downward(const ConvergenceSeries& s, const OracleSchedule& oracle, int iterations);

struct ConvergenceResult {
  std::vector<ConvergenceSeries> series;
  std::vector<OracleSchedule> schedules;  // one per seed
  nlohmann::json summary(const ScenarioConfig& cfg) const;
};

ConvergenceResult run_convergence(const ScenarioConfig& cfg);
void write_convergence_csv(std::ostream& out, const ConvergenceResult& r);

struct RegretRun {
  std::uint64_t seed = 0;
  std::string schedule;  // stationary | changepoint
  double delta = 0.0;
  RegretCheck check{};
  std::uint64_t eta = 0;
  std::uint64_t steps = 0;
};

std::vector<RegretRun> run_regret(const ScenarioConfig& cfg);
void write_regret_csv(std::ostream& out, const std::vector<RegretRun>& runs);
/// Violation fractions per (schedule, delta).
nlohmann::json regret_summary(const std::vector<RegretRun>& runs);

struct EventLog {
  std::string label;
  std::vector<SimEvent> events;
};

struct CompareResult {
  std::vector<RunReport> reports;
  std::vector<WorkflowRun> runs;
  std::vector<NormalizedAverage> normalized;
  std::vector<EventLog> event_logs;
  /// Final learner states per seed and ASA strategy.
  nlohmann::json learners;
};

/// Per seed and strategy, the (workflow, scale) cells are released one after
/// another into the same background stream; ASA learners persist across the
/// cells of a seed. Throws UnsatisfiableJob when a stage does not fit.
CompareResult run_compare(const ScenarioConfig& cfg);

struct AccuracyRow {
  std::uint64_t seed = 0;
  std::string geometry;
  int cores = 0;
  std::string strategy;
  std::size_t predictions = 0;
  double real_wait_mean = 0, real_wait_std = 0;
  double predicted_mean = 0, predicted_std = 0;
  double perceived_mean = 0, perceived_std = 0;
  double hit_ratio = 0, miss_ratio = 0;
  double overhead_hours = 0;
  int resubmissions = 0;
};

std::vector<AccuracyRow> run_accuracy(const ScenarioConfig& cfg);
void write_accuracy_csv(std::ostream& out, const std::vector<AccuracyRow>& rows);

/// Writes `text` to dir/name, creating the directory.
void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text);

}  // namespace asa
