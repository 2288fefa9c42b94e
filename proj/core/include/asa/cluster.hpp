#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "asa/action_space.hpp"
#include "asa/background.hpp"

namespace asa {

using JobId = std::uint64_t;

enum class Owner { Foreground, Background };
enum class JobState { Scheduled, Pending, Running, Completed, Cancelled };
enum class EventKind { Submit, Start, End, Cancel };

std::string_view to_string(Owner owner);
std::string_view to_string(EventKind kind);

struct Job {
  int cores = 1;
  /// Requested walltime; the scheduler plans with this value.
  Seconds walltime = 1;
  /// Actual run length. Unset means the job holds its allocation until
  /// release() is called or the walltime runs out.
  std::optional<Seconds> runtime;
  /// Jobs with a future submit time enter the queue when the clock gets there.
  Seconds submit_time = 0;
  /// Not eligible to start until this job has ended (completed or cancelled).
  std::optional<JobId> depends_on;
  Owner owner = Owner::Foreground;
};

struct JobOutcome {
  JobId id = 0;
  int cores = 0;
  Owner owner = Owner::Foreground;
  JobState state = JobState::Scheduled;
  Seconds queued_at = 0;
  std::optional<Seconds> eligible_at;
  std::optional<Seconds> started_at;
  std::optional<Seconds> ended_at;
  /// started_at - eligible_at once started.
  Seconds waited = 0;
  bool cancelled = false;
  /// cores x (end - start); zero for jobs that never started.
  std::int64_t charged_core_seconds = 0;
};

struct SimEvent {
  Seconds time = 0;
  EventKind kind = EventKind::Submit;
  JobId job = 0;
  int cores = 0;
  Owner owner = Owner::Foreground;

  bool operator==(const SimEvent&) const = default;
};

/// A job that can never run on this cluster.
class UnsatisfiableJob : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Space-shared cluster with one batch queue scheduled FCFS with EASY
/// backfilling.
///
/// Time is integer seconds. Events at equal times are processed in insertion
/// order, and a scheduling pass runs after each batch of same-time events, so
/// identical inputs give identical traces. Copyable; each copy is an
/// independent simulation.
class ClusterModel {
 public:
  explicit ClusterModel(int total_cores, BackgroundSource background = {});

  /// Queues a job at max(clock, submit_time). Throws UnsatisfiableJob when it
  /// asks for more cores than the cluster has.
  JobId submit(const Job& job);

  /// Pending or scheduled jobs leave without charge; running jobs end now and
  /// are charged for their occupancy. Throws std::out_of_range for unknown ids
  /// and std::logic_error for jobs that already ended.
  void cancel(JobId id);

  /// Ends a running job at `end_time` (clock <= end_time <= start + walltime).
  void release(JobId id, Seconds end_time);

  /// Processes every event with time <= `time`, then sets the clock to `time`.
  /// Returns the events emitted since the previous call, including those from
  /// submit() and cancel().
  std::vector<SimEvent> run_until(Seconds time);

  /// Time of the next thing that can change state; the clock itself when a
  /// scheduling pass is owed.
  std::optional<Seconds> next_event_time() const;

  /// Wait a job of this shape would see if submitted now, assuming nothing
  /// else arrives. Simulates a copy; this model is untouched.
  Seconds probe_wait_time(int cores, Seconds walltime) const;

  Seconds clock() const noexcept { return clock_; }
  int total_cores() const noexcept { return total_cores_; }
  int used_cores() const noexcept { return used_cores_; }
  std::size_t pending_count() const noexcept { return pending_.size(); }
  std::size_t running_count() const noexcept { return running_.size(); }

  const JobOutcome& outcome(JobId id) const;

  /// Full event history is kept only while enabled (off by default).
  void set_trace_enabled(bool enabled) { trace_enabled_ = enabled; }
  const std::vector<SimEvent>& trace() const noexcept { return trace_; }
  /// CSV with header `time,event_kind,job_id,cores,owner`.
  void write_trace_csv(std::ostream& out) const;

 private:
  enum class Internal { Arrival, Submit, Complete };

  struct Record {
    Job job;
    JobOutcome out;
    Seconds planned_end = 0;
  };

  struct Queued {
    Seconds time;
    std::uint64_t seq;
    Internal kind;
    JobId job;

    bool operator>(const Queued& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  Record& rec(JobId id);
  const Record& rec(JobId id) const;
  void push(Seconds time, Internal kind, JobId job);
  void emit(EventKind kind, const Record& r);
  void enqueue(Record& r);
  void start(Record& r);
  void finish(Record& r, bool cancelled);
  void schedule_next_arrival();
  void process(const Queued& ev);
  void schedule_pass();
  bool parent_done(const Job& job) const;

  int total_cores_;
  int used_cores_ = 0;
  Seconds clock_ = 0;
  std::uint64_t seq_ = 0;
  bool dirty_ = false;
  bool trace_enabled_ = false;

  BackgroundSource background_;
  std::optional<BackgroundArrival> next_arrival_;

  std::priority_queue<Queued, std::vector<Queued>, std::greater<>> events_;
  std::vector<Record> jobs_;
  std::vector<JobId> pending_;  // queue order
  std::vector<JobId> running_;
  std::vector<SimEvent> outbox_;
  std::vector<SimEvent> trace_;
};

}  // namespace asa
