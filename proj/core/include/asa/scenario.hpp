#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asa/action_space.hpp"
#include "asa/background.hpp"
#include "asa/learner.hpp"
#include "asa/strategies.hpp"
#include "asa/workflow.hpp"

namespace asa {

/// Malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default background: a moderately loaded 256-core machine.
std::vector<BackgroundRegime> default_regimes();

struct ClusterConfig {
  int total_cores = 256;
  /// Background-only time simulated before the first workflow is released.
  Seconds warmup_s = 6 * 3600;
  /// Empty means an idle machine.
  std::vector<BackgroundRegime> regimes = default_regimes();
  /// Length of the recorded trace in frozen-trace mode.
  Seconds frozen_horizon_s = 7 * 24 * 3600;
  /// Replay one recorded background trace for every strategy of a seed.
  bool frozen_trace = false;
  /// Write the full cluster event log next to the other outputs.
  bool export_event_traces = false;
};

/// A stage in a user-defined workflow. Cores unset means "use the scale".
struct CustomStage {
  std::string name;
  Seconds runtime_s = 1;
  std::optional<int> cores;
};

struct CustomWorkflow {
  std::string name;
  std::vector<CustomStage> stages;

  WorkflowSpec at_scale(int scale_cores) const;
};

struct ConvergenceConfig {
  int iterations = 1000;
  std::vector<int> changepoints{0, 200, 400, 600, 800};
  /// Fixed true-wait levels, one per changepoint. Empty draws them per seed.
  std::vector<Seconds> levels;
  double level_min_s = 30.0;
  double level_max_s = 50000.0;
  int window = 20;
  std::vector<Policy> policies{Policy::greedy(), Policy::default_policy(), Policy::tuned(50)};
};

/// A job geometry submitted repeatedly behind a fixed-length predecessor.
struct Geometry {
  int cores = 1;
  Seconds walltime_s = 60;
  Seconds predecessor_s = 600;
};

struct AccuracyConfig {
  int repetitions = 60;
  Seconds interval_s = 60;
  /// Extra geometries on top of the configured workflows and scales.
  std::vector<Geometry> geometries;
  bool include_workflows = true;
  std::vector<StrategyKind> strategies{StrategyKind::asa(), StrategyKind::asa_naive()};
};

struct RegretConfig {
  int steps = 2000;
  std::vector<double> deltas{0.5, 0.05};
  /// Independent runs per base seed.
  int runs = 100;
  Policy policy = Policy::default_policy();
};

struct ScenarioConfig {
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  ClusterConfig cluster;
  ActionGrid grid = canonical_grid();
  Policy policy = Policy::tuned(50);
  GammaSchedule gamma;
  std::vector<std::string> workflows{"montage", "blast", "statistics"};
  std::vector<CustomWorkflow> custom_workflows;
  std::vector<int> scales{28, 56, 112};
  std::vector<StrategyKind> strategies{StrategyKind::big_job(), StrategyKind::per_stage(), StrategyKind::asa()};
  Seconds naive_grace_s = 60;
  /// Release spacing between consecutive (workflow, scale) cells.
  Seconds submission_gap_s = 600;
  ConvergenceConfig convergence;
  AccuracyConfig accuracy;
  RegretConfig regret;

  /// Every configured workflow at one scale, builtins first.
  std::vector<WorkflowSpec> workflows_at(int scale_cores) const;
  /// Rejects inconsistent settings with ConfigError.
  void validate() const;
  /// Uses one estimation policy everywhere a policy is chosen.
  void override_policy(const Policy& p);
};

ScenarioConfig parse_scenario(const std::string& yaml_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace asa
