#include <gtest/gtest.h>

#include <memory>

#include "asa/metrics.hpp"
#include "asa/strategies.hpp"

using namespace asa;

namespace {

// A two-value grid pins every estimate to roughly `a` seconds.
LearnerBank pinned_bank(Seconds a) { return LearnerBank(ActionGrid({a, a + 1}), 1); }

Job external(int cores, Seconds runtime, Seconds submit) {
  return Job{cores, runtime, runtime, submit, std::nullopt, Owner::Foreground};
}

const WorkflowSpec kTwoStage("pair", {{"prep", 1000, 2}, {"main", 100, 10}});

}  // namespace

TEST(StrategyKind, ParseAndFlags) {
  EXPECT_EQ(StrategyKind::parse("big_job"), StrategyKind::big_job());
  EXPECT_EQ(StrategyKind::parse("asa_naive").name(), "asa_naive");
  EXPECT_THROW(StrategyKind::parse("bigjob"), std::invalid_argument);
  EXPECT_TRUE(StrategyKind::asa().use_dependencies());
  EXPECT_FALSE(StrategyKind::asa_naive().use_dependencies());
  EXPECT_TRUE(StrategyKind::asa_naive().is_asa());
  EXPECT_FALSE(StrategyKind::per_stage().is_asa());
}

TEST(LearnerBank, BucketsByPowersOfTwoMinutes) {
  EXPECT_EQ(LearnerBank::walltime_bucket(1), 0);
  EXPECT_EQ(LearnerBank::walltime_bucket(60), 0);
  EXPECT_EQ(LearnerBank::walltime_bucket(61), 1);
  EXPECT_EQ(LearnerBank::walltime_bucket(120), 1);
  EXPECT_EQ(LearnerBank::walltime_bucket(3600), 6);
  EXPECT_THROW(LearnerBank::walltime_bucket(0), std::invalid_argument);
  LearnerBank bank(canonical_grid(), 1);
  Learner& a = bank.at(28, 300);
  EXPECT_EQ(&a, &bank.at(28, 290));
  EXPECT_NE(&a, &bank.at(56, 300));
  EXPECT_EQ(bank.size(), 2u);
}

TEST(Strategies, IdleClusterRunsBackToBack) {
  for (const auto& wf : builtin_profiles(28)) {
    ClusterModel c1(64), c2(64), c3(64);
    LearnerBank bank(canonical_grid(), 3);
    const auto big = run_big_job(c1, wf);
    const auto per = run_per_stage(c2, wf);
    const auto asa = run_asa(c3, wf, bank, StrategyKind::asa());
    const Seconds total = total_runtime(wf);
    EXPECT_EQ(makespan(big, 0), total);
    EXPECT_EQ(makespan(per, 0), total);
    EXPECT_EQ(makespan(asa.traces, 0), total);
    std::int64_t big_cs = 0, per_cs = 0, asa_cs = 0, oh = 0;
    for (const auto& t : big) big_cs += t.charged_core_seconds;
    for (const auto& t : per) per_cs += t.charged_core_seconds;
    for (const auto& t : asa.traces) {
      asa_cs += t.charged_core_seconds;
      oh += t.overhead_core_seconds;
      EXPECT_EQ(t.perceived_wait, 0);
    }
    EXPECT_EQ(big_cs, big_job_core_seconds(wf));
    EXPECT_EQ(per_cs, per_stage_core_seconds(wf));
    EXPECT_EQ(asa_cs, per_stage_core_seconds(wf));
    EXPECT_EQ(oh, 0);
    EXPECT_EQ(asa.predictions.size(), wf.stages().size() - 1);
  }
}

// 10 cores. An 8-core job holds the machine until 1500 and a 10-core job
// arrives at 950. Per-Stage queues stage 2 behind it; ASA (estimate 100 s)
// queued stage 2 at 900 and keeps that position.
TEST(Strategies, UnderEstimateStillBeatsPerStage) {
  auto setup = [] {
    ClusterModel c(10);
    c.submit(external(8, 1500, 0));
    c.submit(external(10, 300, 950));
    return c;
  };
  ClusterModel per_cluster = setup();
  const auto per = run_per_stage(per_cluster, kTwoStage);
  EXPECT_EQ(per[1].raw_wait, 800);

  ClusterModel asa_cluster = setup();
  auto bank = pinned_bank(100);
  const auto run = run_asa(asa_cluster, kTwoStage, bank, StrategyKind::asa(Policy::greedy()));
  const auto& tr = run.traces[1];
  EXPECT_EQ(tr.submit_time, 900);
  EXPECT_EQ(tr.stage_start, 1500);
  EXPECT_EQ(run.predictions[0].estimate, 100);
  EXPECT_EQ(run.predictions[0].realized_wait, 600);
  // perceived = w - a when the estimate is short.
  EXPECT_EQ(tr.perceived_wait, run.predictions[0].realized_wait - run.predictions[0].estimate);
  EXPECT_LE(tr.perceived_wait, per[1].raw_wait);
  EXPECT_EQ(tr.overhead_core_seconds, 0);
}

TEST(Strategies, DependenciesNeverIdle) {
  ClusterModel c(16);
  auto bank = pinned_bank(900);  // far longer than needed
  const auto run = run_asa(c, kTwoStage, bank, StrategyKind::asa(Policy::greedy()));
  EXPECT_EQ(run.traces[1].submit_time, 100);
  EXPECT_EQ(run.traces[1].stage_start, 1000);
  EXPECT_EQ(run.traces[1].overhead_core_seconds, 0);
  EXPECT_EQ(run.traces[1].resubmissions, 0);
  const auto hm = hit_miss(std::span(run.traces).subspan(1), run.predictions);
  EXPECT_EQ(hm.hit_ratio, 1.0);
  EXPECT_EQ(hm.overhead_hours, 0.0);
}

// Idle cluster, estimate 300 s, grace 60 s: allocations at 700, 760, 820 and
// 880 are each cancelled after idling 60 s; the one at 940 is kept and idles
// until 1000.
TEST(Strategies, NaiveOverEstimateResubmits) {
  ClusterModel c(16);
  auto bank = pinned_bank(300);
  const auto run = run_asa(c, kTwoStage, bank, StrategyKind::asa_naive(Policy::greedy()), 60);
  const auto& tr = run.traces[1];
  EXPECT_EQ(tr.submit_time, 700);
  EXPECT_EQ(tr.resubmissions, 4);
  EXPECT_EQ(tr.alloc_ready_time, 940);
  EXPECT_EQ(tr.stage_start, 1000);
  EXPECT_EQ(tr.stage_end, 1100);
  EXPECT_EQ(tr.overhead_core_seconds, 10 * 300);
  EXPECT_EQ(tr.charged_core_seconds, 10 * 300 + 10 * 100);
  EXPECT_EQ(tr.perceived_wait, 0);
  // Only the first attempt is learned from.
  EXPECT_EQ(run.predictions[0].realized_wait, 0);
  const auto hm = hit_miss(std::span(run.traces).subspan(1), run.predictions);
  EXPECT_EQ(hm.miss_ratio, 1.0);
  EXPECT_NEAR(hm.overhead_hours, 3000.0 / 3600.0, 1e-12);
}

TEST(Strategies, NaiveWithinGraceJustIdles) {
  ClusterModel c(16);
  auto bank = pinned_bank(40);
  const auto run = run_asa(c, kTwoStage, bank, StrategyKind::asa_naive(Policy::greedy()), 60);
  const auto& tr = run.traces[1];
  EXPECT_EQ(tr.resubmissions, 0);
  EXPECT_EQ(tr.alloc_ready_time, 960);
  EXPECT_EQ(tr.overhead_core_seconds, 10 * 40);
}

TEST(Strategies, ConcurrentDriversShareLearners) {
  BackgroundRegime r;
  r.arrivals_per_hour = 30;
  r.max_cores = 32;
  ClusterModel c(128, BackgroundSource::live({r}, 2));
  c.run_until(3600);
  LearnerBank bank(canonical_grid(), 4);
  std::vector<std::unique_ptr<WorkflowDriver>> owned;
  std::vector<WorkflowDriver*> drivers;
  for (int i = 0; i < 6; ++i) {
    owned.push_back(make_driver(builtin_profile("montage", 28), StrategyKind::asa(), &bank, 3600 + 60 * i));
    drivers.push_back(owned.back().get());
  }
  run_drivers(c, drivers);
  for (const auto* d : drivers) {
    EXPECT_TRUE(d->done());
    EXPECT_EQ(d->result().released_at, d->release_time());
    for (const auto& t : d->result().traces) EXPECT_EQ(t.overhead_core_seconds, 0);
  }
  std::uint64_t steps = 0;
  for (const auto& [key, l] : bank.learners()) steps += l.state().step;
  EXPECT_GT(steps, 0u);
}

TEST(Strategies, OversizedStageIsUnsatisfiable) {
  ClusterModel c(8);
  EXPECT_THROW(run_per_stage(c, builtin_profile("blast", 16)), UnsatisfiableJob);
  EXPECT_THROW(make_driver(kTwoStage, StrategyKind::asa(), nullptr, 0), std::invalid_argument);
}
