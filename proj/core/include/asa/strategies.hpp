#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asa/cluster.hpp"
#include "asa/learner.hpp"
#include "asa/workflow.hpp"

namespace asa {

/// Submission strategy for a workflow.
struct StrategyKind {
  enum class Kind { BigJob, PerStage, Asa, AsaNaive };

  Kind kind = Kind::PerStage;
  /// Estimation policy for Asa / AsaNaive.
  Policy policy = Policy::tuned(50);

  static StrategyKind big_job() { return {Kind::BigJob, {}}; }
  static StrategyKind per_stage() { return {Kind::PerStage, {}}; }
  static StrategyKind asa(Policy p = Policy::tuned(50)) { return {Kind::Asa, p}; }
  static StrategyKind asa_naive(Policy p = Policy::tuned(50)) { return {Kind::AsaNaive, p}; }

  /// Parses big_job | per_stage | asa | asa_naive.
  static StrategyKind parse(std::string_view text, Policy policy = Policy::tuned(50));
  std::string name() const;

  bool is_asa() const { return kind == Kind::Asa || kind == Kind::AsaNaive; }
  /// Only dependency-enabled ASA chains stage jobs through the scheduler.
  bool use_dependencies() const { return kind == Kind::Asa; }

  bool operator==(const StrategyKind&) const = default;
};

struct StageTrace {
  std::string stage;
  /// First submission of the stage's job.
  Seconds submit_time = 0;
  /// When the allocation that ran the stage started.
  Seconds alloc_ready_time = 0;
  Seconds stage_start = 0;
  Seconds stage_end = 0;
  /// Gap between the predecessor's end (workflow release for the first
  /// stage) and this stage's start.
  Seconds perceived_wait = 0;
  /// alloc_ready_time minus the submit time of the allocation that ran it.
  Seconds raw_wait = 0;
  int resubmissions = 0;
  /// Core-seconds allocated before the stage could use them.
  std::int64_t overhead_core_seconds = 0;
  /// Everything the scheduler charged for this stage, cancelled attempts
  /// included.
  std::int64_t charged_core_seconds = 0;
};

/// One pro-active estimate and what the queue actually did.
struct Prediction {
  Seconds estimate = 0;
  Seconds realized_wait = 0;
};

struct WorkflowRun {
  std::string workflow;
  StrategyKind strategy;
  Seconds released_at = 0;
  std::vector<StageTrace> traces;
  /// Aligned with traces[1..] for ASA strategies; empty otherwise.
  std::vector<Prediction> predictions;
  /// Labels filled in by experiment harnesses.
  int scale_cores = 0;
  std::uint64_t seed = 0;
};

/// Learners keyed by job geometry (cores, walltime bucket). Buckets are
/// powers of two in minutes: bucket k holds walltimes in (2^(k-1), 2^k] min.
class LearnerBank {
 public:
  LearnerBank(ActionGrid grid, std::uint64_t seed, GammaSchedule gamma = {});

  static int walltime_bucket(Seconds walltime);
  Learner& at(int cores, Seconds walltime);

  const ActionGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return learners_.size(); }
  const std::map<std::pair<int, int>, Learner>& learners() const noexcept { return learners_; }

 private:
  ActionGrid grid_;
  std::uint64_t seed_;
  GammaSchedule gamma_;
  std::map<std::pair<int, int>, Learner> learners_;
};

/// Reacts to cluster events on behalf of one workflow. All drivers of an
/// experiment share one ClusterModel and one event loop.
class WorkflowDriver {
 public:
  WorkflowDriver(WorkflowSpec wf, StrategyKind strategy, Seconds release_at);
  virtual ~WorkflowDriver() = default;

  WorkflowDriver(const WorkflowDriver&) = delete;
  WorkflowDriver& operator=(const WorkflowDriver&) = delete;

  Seconds release_time() const noexcept { return run_.released_at; }
  bool begun() const noexcept { return begun_; }
  bool done() const noexcept { return done_; }
  const WorkflowRun& result() const noexcept { return run_; }
  const WorkflowSpec& workflow() const noexcept { return wf_; }

  void begin(ClusterModel& cluster);
  virtual void on_event(ClusterModel& cluster, const SimEvent& ev) = 0;
  virtual std::optional<Seconds> next_timer() const { return std::nullopt; }
  virtual void on_timer(ClusterModel& /*cluster*/) {}

 protected:
  virtual void on_begin(ClusterModel& cluster) = 0;

  WorkflowSpec wf_;
  WorkflowRun run_;
  bool begun_ = false;
  bool done_ = false;
};

std::unique_ptr<WorkflowDriver> make_big_job_driver(WorkflowSpec wf, Seconds release_at);
std::unique_ptr<WorkflowDriver> make_per_stage_driver(WorkflowSpec wf, Seconds release_at);
/// Grace window: how long a naive early allocation may idle before it is
/// cancelled and resubmitted.
std::unique_ptr<WorkflowDriver> make_asa_driver(WorkflowSpec wf, StrategyKind strategy, LearnerBank& bank,
                                                Seconds release_at, Seconds naive_grace = 60);
std::unique_ptr<WorkflowDriver> make_driver(WorkflowSpec wf, StrategyKind strategy, LearnerBank* bank,
                                            Seconds release_at, Seconds naive_grace = 60);

/// Runs the shared event loop until every driver is done. Throws
/// UnsatisfiableJob for stages larger than the cluster and std::logic_error if
/// the simulation stalls.
void run_drivers(ClusterModel& cluster, std::span<WorkflowDriver* const> drivers);

/// Single-workflow conveniences; the workflow is released at the current clock.
std::vector<StageTrace> run_big_job(ClusterModel& cluster, const WorkflowSpec& wf);
std::vector<StageTrace> run_per_stage(ClusterModel& cluster, const WorkflowSpec& wf);
WorkflowRun run_asa(ClusterModel& cluster, const WorkflowSpec& wf, LearnerBank& bank, const StrategyKind& kind,
                    Seconds naive_grace = 60);

}  // namespace asa
