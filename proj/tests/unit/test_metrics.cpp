#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "asa/metrics.hpp"

using namespace asa;

namespace {

RunReport report(const std::string& wf, int scale, const std::string& strategy, Seconds twt, Seconds makespan,
                 double ch) {
  RunReport r;
  r.workflow = wf;
  r.scale_cores = scale;
  r.strategy = strategy;
  r.total_wait_s = twt;
  r.makespan_s = makespan;
  r.core_hours = ch;
  return r;
}

double percent(const std::vector<NormalizedAverage>& rows, const std::string& strategy, Metric m) {
  for (const auto& r : rows) {
    if (r.strategy == strategy && r.metric == m) return r.percent;
  }
  ADD_FAILURE() << "missing " << strategy;
  return 0.0;
}

// Brute-force core-hour totals.
double naive_big_job_hours(const WorkflowSpec& wf) {
  int n = 0;
  double hours = 0.0;
  for (const auto& s : wf.stages()) n = std::max(n, s.cores);
  for (const auto& s : wf.stages()) hours += s.runtime / 3600.0;
  return n * hours;
}

double naive_per_stage_hours(const WorkflowSpec& wf) {
  double total = 0.0;
  for (const auto& s : wf.stages()) total += s.cores * (s.runtime / 3600.0);
  return total;
}

}  // namespace

TEST(CoreHours, Examples) {
  const WorkflowSpec a("a", {{"s1", 3600, 4}, {"s2", 7200, 4}});
  EXPECT_DOUBLE_EQ(core_hours_big_job(a), 12.0);
  const WorkflowSpec b("b", {{"s1", 3600, 4}, {"s2", 7200, 1}});
  EXPECT_DOUBLE_EQ(core_hours_per_stage(b), 6.0);
  const WorkflowSpec single("c", {{"s", 500, 7}});
  EXPECT_DOUBLE_EQ(core_hours_big_job(single), core_hours_per_stage(single));
  const auto montage = builtin_profile("montage", 112);
  EXPECT_NEAR(core_hours_big_job(montage), naive_big_job_hours(montage), 1e-9);
  EXPECT_NEAR(core_hours_per_stage(montage), naive_per_stage_hours(montage), 1e-9);
}

TEST(CoreHours, PerStageNeverExceedsBigJob) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 8), cores(1, 64);
  std::uniform_int_distribution<Seconds> secs(1, 10000);
  for (int i = 0; i < 500; ++i) {
    std::vector<StageSpec> stages;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) stages.push_back({"s", secs(rng), cores(rng)});
    const WorkflowSpec wf("w", stages);
    bool uniform = true;
    for (const auto& s : stages) uniform &= s.cores == wf.peak_cores();
    const auto per = per_stage_core_seconds(wf), big = big_job_core_seconds(wf);
    EXPECT_LE(per, big);
    EXPECT_EQ(per == big, uniform);
  }
}

TEST(Makespan, Basics) {
  std::vector<StageTrace> t(1);
  t[0].stage_end = 150;
  EXPECT_EQ(makespan(t, 0), 150);
  EXPECT_THROW(makespan({}, 0), std::invalid_argument);
}

TEST(Makespan, PerStageDecomposesIntoRuntimesAndWaits) {
  BackgroundRegime r;
  r.arrivals_per_hour = 25;
  r.max_cores = 48;
  r.max_walltime = 5400;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ClusterModel c(128, BackgroundSource::live({r}, seed));
    c.run_until(6 * 3600);
    const auto wf = builtin_profile("montage", 56);
    const auto traces = run_per_stage(c, wf);
    Seconds waits = 0;
    for (const auto& t : traces) waits += t.raw_wait;
    EXPECT_EQ(makespan(traces, 6 * 3600), total_runtime(wf) + waits);
    EXPECT_EQ(total_waiting_time(traces, StrategyKind::per_stage()), waits);
  }
}

TEST(TotalWait, PerStrategyRules) {
  std::vector<StageTrace> t(3);
  t[0].raw_wait = 150;
  t[0].perceived_wait = 10;
  t[1].perceived_wait = 0;
  t[1].raw_wait = 40;
  t[2].perceived_wait = 5;
  t[2].raw_wait = 7;
  EXPECT_EQ(total_waiting_time(t, StrategyKind::big_job()), 150);
  EXPECT_EQ(total_waiting_time(t, StrategyKind::per_stage()), 197);
  EXPECT_EQ(total_waiting_time(t, StrategyKind::asa()), 15);
}

TEST(HitMiss, Ratios) {
  std::vector<StageTrace> t(4);
  std::vector<Prediction> p(4);
  auto hm = hit_miss(t, p);
  EXPECT_EQ(hm.hit_ratio, 1.0);
  EXPECT_EQ(hm.miss_ratio, 0.0);
  EXPECT_EQ(hm.overhead_hours, 0.0);
  t[2].resubmissions = 1;
  t[2].overhead_core_seconds = 7200;
  hm = hit_miss(t, p);
  EXPECT_DOUBLE_EQ(hm.hit_ratio, 0.75);
  EXPECT_DOUBLE_EQ(hm.miss_ratio, 0.25);
  EXPECT_DOUBLE_EQ(hm.overhead_hours, 2.0);
  EXPECT_THROW(hit_miss(t, std::vector<Prediction>(3)), std::invalid_argument);
  hm = hit_miss({}, {});
  EXPECT_EQ(hm.hit_ratio + hm.miss_ratio, 0.0);
}

TEST(Normalized, SimpleRows) {
  std::vector<RunReport> same{report("w", 8, "a", 5, 5, 5), report("w", 8, "b", 5, 5, 5)};
  for (const auto& r : normalized_averages(same)) EXPECT_EQ(r.percent, 0.0);
  std::vector<RunReport> two{report("w", 8, "a", 1, 1, 10), report("w", 8, "b", 1, 1, 20)};
  const auto out = normalized_averages(two);
  EXPECT_DOUBLE_EQ(percent(out, "a", Metric::CoreHours), 0.0);
  EXPECT_DOUBLE_EQ(percent(out, "b", Metric::CoreHours), 100.0);
}

TEST(Normalized, RepeatedCellsAreAveragedFirst) {
  std::vector<RunReport> rs{report("w", 8, "a", 10, 1, 1), report("w", 8, "a", 30, 1, 1),
                            report("w", 8, "b", 40, 1, 1)};
  const auto out = normalized_averages(rs);
  EXPECT_DOUBLE_EQ(percent(out, "b", Metric::TotalWait), 100.0);
}

TEST(Normalized, ZeroMinimumIsFloored) {
  std::vector<RunReport> rs{report("w", 8, "a", 0, 1, 1), report("w", 8, "b", 5, 1, 1)};
  const auto out = normalized_averages(rs);
  EXPECT_DOUBLE_EQ(percent(out, "a", Metric::TotalWait), 0.0);
  EXPECT_DOUBLE_EQ(percent(out, "b", Metric::TotalWait), 400.0);
}

TEST(Normalized, Errors) {
  EXPECT_THROW(normalized_averages({}), std::invalid_argument);
  std::vector<RunReport> gap{report("w", 8, "a", 1, 1, 1), report("w", 16, "a", 1, 1, 1),
                             report("w", 8, "b", 1, 1, 1)};
  EXPECT_THROW(normalized_averages(gap), std::invalid_argument);
}

// Montage rows of the published comparison table: the mean of per-row ratios
// reproduces the TWT and makespan normalized averages.
TEST(Normalized, ReproducesPublishedMontageColumns) {
  const int scales[] = {28, 56, 112, 160, 320, 640};
  const Seconds twt[3][6] = {{150, 206, 452, 1415, 8135, 10200},
                             {258, 426, 699, 2220, 15582, 16600},
                             {132, 219, 393, 1652, 10062, 11851}};
  const Seconds mk[3][6] = {{1287, 1261, 1513, 2718, 10126, 11940},
                            {1408, 1496, 1779, 3507, 17170, 18200},
                            {1277, 1280, 1464, 2921, 11637, 13436}};
  const char* names[] = {"big_job", "per_stage", "asa"};
  std::vector<RunReport> rs;
  for (int s = 0; s < 3; ++s) {
    for (int k = 0; k < 6; ++k) rs.push_back(report("montage", scales[k], names[s], twt[s][k], mk[s][k], 1));
  }
  const auto out = normalized_averages(rs);
  EXPECT_NEAR(percent(out, "big_job", Metric::TotalWait), 5.0, 1.0);
  EXPECT_NEAR(percent(out, "per_stage", Metric::TotalWait), 82.0, 1.0);
  EXPECT_NEAR(percent(out, "asa", Metric::TotalWait), 10.0, 1.0);
  EXPECT_NEAR(percent(out, "big_job", Metric::Makespan), 1.0, 1.0);
  EXPECT_NEAR(percent(out, "per_stage", Metric::Makespan), 34.0, 1.0);
  EXPECT_NEAR(percent(out, "asa", Metric::Makespan), 6.0, 1.0);
}

TEST(Report, FromRun) {
  WorkflowRun run;
  run.workflow = "w";
  run.strategy = StrategyKind::asa();
  run.released_at = 100;
  run.traces.resize(2);
  run.traces[0] = {"a", 100, 110, 110, 210, 10, 10, 0, 0, 3600};
  run.traces[1] = {"b", 150, 210, 210, 260, 0, 60, 0, 0, 3600};
  run.predictions = {{40, 60}};
  const auto r = make_report(run, 28, 7);
  EXPECT_EQ(r.total_wait_s, 10);
  EXPECT_EQ(r.makespan_s, 160);
  EXPECT_EQ(r.core_seconds, 7200);
  EXPECT_DOUBLE_EQ(r.core_hours, 2.0);
  EXPECT_EQ(r.hit_ratio, 1.0);
  EXPECT_EQ(r.predictions, 1u);
  const auto j = to_json(r);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["perceived_waits_s"], nlohmann::json::array({10, 0}));
}

TEST(Csv, SchemaLinesLeadEveryFile) {
  std::ostringstream a, b, c;
  write_reports_csv(a, {});
  write_stage_traces_csv(b, {});
  write_normalized_csv(c, {});
  EXPECT_EQ(a.str().rfind("# schema: asa.run_report/1\nseed,", 0), 0u);
  EXPECT_EQ(b.str().rfind("# schema: asa.stage_trace/1\n", 0), 0u);
  EXPECT_EQ(c.str(), "# schema: asa.normalized_average/1\nworkflow,strategy,metric,percent\n");
  EXPECT_DOUBLE_EQ(display_hours(5400), 1.5);
  EXPECT_DOUBLE_EQ(display_hours(100), 0.03);
}
