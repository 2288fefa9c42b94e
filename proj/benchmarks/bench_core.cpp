#include <benchmark/benchmark.h>

#include "asa/action_space.hpp"
#include "asa/experiments.hpp"
#include "asa/learner.hpp"
#include "asa/scenario.hpp"

namespace {

void BM_ClosestAction(benchmark::State& state) {
  const asa::ActionGrid grid = asa::canonical_grid();
  asa::Seconds w = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(asa::closest_action(grid, w));
    w = (w + 977) % 120000;
  }
}
BENCHMARK(BM_ClosestAction);

void BM_LearnerStep(benchmark::State& state) {
  const auto policy = state.range(0) == 0 ? asa::Policy::default_policy() : asa::Policy::tuned(static_cast<int>(state.range(0)));
  asa::Learner learner(asa::canonical_grid(), 7);
  asa::Seconds w = 30;
  for (auto _ : state) {
    learner.estimate(policy);
    learner.observe_true_wait(w, policy);
    w = w == 30 ? 4000 : 30;
  }
}
BENCHMARK(BM_LearnerStep)->Arg(0)->Arg(50);

void BM_Compare(benchmark::State& state) {
  asa::ScenarioConfig cfg;
  cfg.cluster.total_cores = 128;
  cfg.cluster.warmup_s = 7200;
  cfg.scales = {32};
  for (auto _ : state) {
    auto result = asa::run_compare(cfg);
    benchmark::DoNotOptimize(result.reports.size());
  }
}
BENCHMARK(BM_Compare)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
