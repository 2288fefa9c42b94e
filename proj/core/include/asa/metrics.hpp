#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "asa/strategies.hpp"
#include "asa/workflow.hpp"

namespace asa {

/// Peak cores held for the whole chain: n * sum(t_i), in core-seconds.
std::int64_t big_job_core_seconds(const WorkflowSpec& wf);
/// sum(t_i * n_i), in core-seconds.
std::int64_t per_stage_core_seconds(const WorkflowSpec& wf);

double core_hours_big_job(const WorkflowSpec& wf);
double core_hours_per_stage(const WorkflowSpec& wf);

/// Last stage end minus the workflow's submission time.
Seconds makespan(std::span<const StageTrace> traces, Seconds submitted_at);

/// Big Job counts its single first wait, Per-Stage every raw stage wait, ASA
/// variants the perceived waits.
Seconds total_waiting_time(std::span<const StageTrace> traces, const StrategyKind& strategy);

struct HitMiss {
  double hit_ratio = 0.0;
  double miss_ratio = 0.0;
  double overhead_hours = 0.0;
};

/// A prediction misses when its stage had to be cancelled and resubmitted.
/// Both ratios are 0 when there are no predictions. Throws
/// std::invalid_argument when the lists differ in length.
HitMiss hit_miss(std::span<const StageTrace> traces, std::span<const Prediction> predictions);

struct RunReport {
  std::string workflow;
  std::string strategy;
  int scale_cores = 0;
  std::uint64_t seed = 0;
  Seconds total_wait_s = 0;
  Seconds makespan_s = 0;
  std::int64_t core_seconds = 0;
  double core_hours = 0.0;
  std::vector<Seconds> perceived_waits;
  double hit_ratio = 0.0;
  double miss_ratio = 0.0;
  double overhead_hours = 0.0;
  std::size_t predictions = 0;
};

/// Collects every metric for a finished run.
RunReport make_report(const WorkflowRun& run, int scale_cores, std::uint64_t seed);

nlohmann::json to_json(const RunReport& report);

enum class Metric { TotalWait, Makespan, CoreHours };
std::string metric_name(Metric m);
double metric_value(const RunReport& r, Metric m);

struct NormalizedAverage {
  std::string workflow;
  std::string strategy;
  Metric metric;
  double percent;
};

/// Per workflow, strategy and metric: the mean over scale rows of
/// (value / row minimum - 1), in percent. Reports sharing (workflow, scale,
/// strategy) are averaged first. A zero row minimum is floored at one unit.
/// Throws std::invalid_argument for an empty input or a row missing a strategy
/// that appears elsewhere in the same workflow.
std::vector<NormalizedAverage> normalized_averages(std::span<const RunReport> reports);

/// CSV writers. Each output starts with a `# schema: <name>/<version>` line
/// followed by the column header row.
void write_reports_csv(std::ostream& out, std::span<const RunReport> reports);
void write_stage_traces_csv(std::ostream& out, std::span<const WorkflowRun> runs);
void write_normalized_csv(std::ostream& out, std::span<const NormalizedAverage> rows);

/// Seconds to hours, rounded to 2 decimals, for presentation only.
double display_hours(std::int64_t seconds);

}  // namespace asa
