#include "asa/metrics.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace asa {

std::int64_t big_job_core_seconds(const WorkflowSpec& wf) {
  return static_cast<std::int64_t>(wf.peak_cores()) * total_runtime(wf);
}

std::int64_t per_stage_core_seconds(const WorkflowSpec& wf) {
  std::int64_t total = 0;
  for (const auto& s : wf.stages()) total += static_cast<std::int64_t>(s.cores) * s.runtime;
  return total;
}

double core_hours_big_job(const WorkflowSpec& wf) {
  return static_cast<double>(big_job_core_seconds(wf)) / 3600.0;
}

double core_hours_per_stage(const WorkflowSpec& wf) {
  return static_cast<double>(per_stage_core_seconds(wf)) / 3600.0;
}

Seconds makespan(std::span<const StageTrace> traces, Seconds submitted_at) {
  if (traces.empty()) throw std::invalid_argument("makespan of an empty trace");
  return traces.back().stage_end - submitted_at;
}

Seconds total_waiting_time(std::span<const StageTrace> traces, const StrategyKind& strategy) {
  Seconds total = 0;
  switch (strategy.kind) {
    case StrategyKind::Kind::BigJob:
      return traces.empty() ? 0 : traces.front().raw_wait;
    case StrategyKind::Kind::PerStage:
      for (const auto& t : traces) total += t.raw_wait;
      return total;
    case StrategyKind::Kind::Asa:
    case StrategyKind::Kind::AsaNaive:
      for (const auto& t : traces) total += t.perceived_wait;
      return total;
  }
  return total;
}

HitMiss hit_miss(std::span<const StageTrace> traces, std::span<const Prediction> predictions) {
  if (traces.size() != predictions.size()) {
    throw std::invalid_argument("traces and predictions differ in length");
  }
  HitMiss hm;
  std::int64_t overhead = 0;
  std::size_t misses = 0;
  for (const auto& t : traces) {
    overhead += t.overhead_core_seconds;
    if (t.resubmissions > 0) ++misses;
  }
  hm.overhead_hours = static_cast<double>(overhead) / 3600.0;
  if (!predictions.empty()) {
    hm.miss_ratio = static_cast<double>(misses) / static_cast<double>(predictions.size());
    hm.hit_ratio = 1.0 - hm.miss_ratio;
  }
  return hm;
}

RunReport make_report(const WorkflowRun& run, int scale_cores, std::uint64_t seed) {
  RunReport r;
  r.workflow = run.workflow;
  r.strategy = run.strategy.name();
  r.scale_cores = scale_cores;
  r.seed = seed;
  r.total_wait_s = total_waiting_time(run.traces, run.strategy);
  r.makespan_s = makespan(run.traces, run.released_at);
  for (const auto& t : run.traces) {
    r.core_seconds += t.charged_core_seconds;
    r.perceived_waits.push_back(t.perceived_wait);
  }
  r.core_hours = static_cast<double>(r.core_seconds) / 3600.0;
  r.predictions = run.predictions.size();
  if (run.strategy.is_asa() && run.traces.size() > 1) {
    const auto hm = hit_miss(std::span(run.traces).subspan(1), run.predictions);
    r.hit_ratio = hm.hit_ratio;
    r.miss_ratio = hm.miss_ratio;
    r.overhead_hours = hm.overhead_hours;
  } else {
    std::int64_t overhead = 0;
    for (const auto& t : run.traces) overhead += t.overhead_core_seconds;
    r.overhead_hours = static_cast<double>(overhead) / 3600.0;
  }
  return r;
}

nlohmann::json to_json(const RunReport& r) {
  return {
      {"workflow", r.workflow},
      {"strategy", r.strategy},
      {"scale_cores", r.scale_cores},
      {"seed", r.seed},
      {"total_wait_s", r.total_wait_s},
      {"makespan_s", r.makespan_s},
      {"core_seconds", r.core_seconds},
      {"core_hours", display_hours(r.core_seconds)},
      {"perceived_waits_s", r.perceived_waits},
      {"hit_ratio", r.hit_ratio},
      {"miss_ratio", r.miss_ratio},
      {"overhead_hours", r.overhead_hours},
      {"predictions", r.predictions},
  };
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::TotalWait: return "twt_s";
    case Metric::Makespan: return "makespan_s";
    case Metric::CoreHours: return "core_hours";
  }
  return "unknown";
}

double metric_value(const RunReport& r, Metric m) {
  switch (m) {
    case Metric::TotalWait: return static_cast<double>(r.total_wait_s);
    case Metric::Makespan: return static_cast<double>(r.makespan_s);
    case Metric::CoreHours: return r.core_hours;
  }
  return 0.0;
}

std::vector<NormalizedAverage> normalized_averages(std::span<const RunReport> reports) {
  if (reports.empty()) throw std::invalid_argument("normalized averages of an empty report set");
  constexpr Metric kMetrics[] = {Metric::TotalWait, Metric::Makespan, Metric::CoreHours};
  // Zero floor: one second, or one core-second expressed in hours.
  auto unit = [](Metric m) { return m == Metric::CoreHours ? 1.0 / 3600.0 : 1.0; };

  // (workflow, scale, strategy) -> summed metric values and sample count.
  using Cell = std::tuple<std::string, int, std::string>;
  std::map<Cell, std::pair<std::array<double, 3>, int>> cells;
  std::map<std::string, std::set<std::string>> strategies;
  std::map<std::string, std::set<int>> scales;
  for (const auto& r : reports) {
    auto& [sum, n] = cells[{r.workflow, r.scale_cores, r.strategy}];
    for (std::size_t k = 0; k < 3; ++k) sum[k] += metric_value(r, kMetrics[k]);
    ++n;
    strategies[r.workflow].insert(r.strategy);
    scales[r.workflow].insert(r.scale_cores);
  }

  std::vector<NormalizedAverage> out;
  for (const auto& [wf, strats] : strategies) {
    const auto& rows = scales[wf];
    for (std::size_t k = 0; k < 3; ++k) {
      std::map<std::string, double> acc;
      for (int scale : rows) {
        std::map<std::string, double> row;
        for (const auto& s : strats) {
          const auto it = cells.find({wf, scale, s});
          if (it == cells.end()) {
            throw std::invalid_argument(fmt::format("workflow {} scale {} has no {} report", wf, scale, s));
          }
          row[s] = it->second.first[k] / it->second.second;
        }
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& [s, v] : row) lowest = std::min(lowest, v);
        const double denom = std::max(lowest, unit(kMetrics[k]));
        for (const auto& [s, v] : row) acc[s] += (v == lowest ? 0.0 : v / denom - 1.0);
      }
      for (const auto& s : strats) {
        out.push_back({wf, s, kMetrics[k], 100.0 * acc[s] / static_cast<double>(rows.size())});
      }
    }
  }
  return out;
}

double display_hours(std::int64_t seconds) {
  return std::round(static_cast<double>(seconds) / 36.0) / 100.0;
}

void write_reports_csv(std::ostream& out, std::span<const RunReport> reports) {
  out << "# schema: asa.run_report/1\n";
  out << "seed,workflow,scale_cores,strategy,total_wait_s,makespan_s,core_seconds,core_hours,"
         "hit_ratio,miss_ratio,overhead_hours,predictions\n";
  for (const auto& r : reports) {
    out << fmt::format("{},{},{},{},{},{},{},{:.2f},{:.4f},{:.4f},{:.4f},{}\n", r.seed, r.workflow, r.scale_cores,
                       r.strategy, r.total_wait_s, r.makespan_s, r.core_seconds, display_hours(r.core_seconds),
                       r.hit_ratio, r.miss_ratio, r.overhead_hours, r.predictions);
  }
}

void write_stage_traces_csv(std::ostream& out, std::span<const WorkflowRun> runs) {
  out << "# schema: asa.stage_trace/1\n";
  out << "seed,scale_cores,workflow,strategy,stage,submit,alloc_ready,start,end,perceived_wait,raw_wait,"
         "resubmissions,overhead_cs,charged_cs\n";
  for (const auto& run : runs) {
    for (const auto& t : run.traces) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", run.seed, run.scale_cores, run.workflow,
                         run.strategy.name(), t.stage, t.submit_time, t.alloc_ready_time, t.stage_start, t.stage_end,
                         t.perceived_wait, t.raw_wait, t.resubmissions, t.overhead_core_seconds,
                         t.charged_core_seconds);
    }
  }
}

void write_normalized_csv(std::ostream& out, std::span<const NormalizedAverage> rows) {
  out << "# schema: asa.normalized_average/1\n";
  out << "workflow,strategy,metric,percent\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{:.2f}\n", r.workflow, r.strategy, metric_name(r.metric), r.percent);
  }
}

}  // namespace asa
