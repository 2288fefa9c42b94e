#include "asa/cluster.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

namespace asa {

std::string_view to_string(Owner owner) {
  return owner == Owner::Foreground ? "foreground" : "background";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Submit: return "submit";
    case EventKind::Start: return "start";
    case EventKind::End: return "end";
    case EventKind::Cancel: return "cancel";
  }
  return "unknown";
}

ClusterModel::ClusterModel(int total_cores, BackgroundSource background)
    : total_cores_(total_cores), background_(std::move(background)) {
  if (total_cores_ < 1) throw std::invalid_argument("cluster needs at least one core");
  schedule_next_arrival();
}

ClusterModel::Record& ClusterModel::rec(JobId id) {
  if (id == 0 || id > jobs_.size()) throw std::out_of_range("unknown job id " + std::to_string(id));
  return jobs_[id - 1];
}

const ClusterModel::Record& ClusterModel::rec(JobId id) const {
  if (id == 0 || id > jobs_.size()) throw std::out_of_range("unknown job id " + std::to_string(id));
  return jobs_[id - 1];
}

const JobOutcome& ClusterModel::outcome(JobId id) const { return rec(id).out; }

void ClusterModel::push(Seconds time, Internal kind, JobId job) {
  events_.push({time, seq_++, kind, job});
}

void ClusterModel::emit(EventKind kind, const Record& r) {
  SimEvent ev{clock_, kind, r.out.id, r.job.cores, r.job.owner};
  outbox_.push_back(ev);
  if (trace_enabled_) trace_.push_back(ev);
}

void ClusterModel::schedule_next_arrival() {
  next_arrival_ = background_.next();
  if (next_arrival_) push(std::max(next_arrival_->time, clock_), Internal::Arrival, 0);
}

bool ClusterModel::parent_done(const Job& job) const {
  if (!job.depends_on) return true;
  const auto state = rec(*job.depends_on).out.state;
  return state == JobState::Completed || state == JobState::Cancelled;
}

JobId ClusterModel::submit(const Job& job) {
  if (job.cores < 1) throw std::invalid_argument("job needs at least one core");
  if (job.cores > total_cores_) {
    throw UnsatisfiableJob("job requests " + std::to_string(job.cores) + " cores on a " +
                           std::to_string(total_cores_) + "-core cluster");
  }
  if (job.walltime < 1) throw std::invalid_argument("job walltime must be > 0");
  if (job.runtime && (*job.runtime < 1 || *job.runtime > job.walltime)) {
    throw std::invalid_argument("job runtime must lie in [1, walltime]");
  }
  if (job.depends_on) rec(*job.depends_on);  // validates the id

  const JobId id = jobs_.size() + 1;
  Record r;
  r.job = job;
  r.out.id = id;
  r.out.cores = job.cores;
  r.out.owner = job.owner;
  jobs_.push_back(std::move(r));
  if (job.submit_time > clock_) {
    push(job.submit_time, Internal::Submit, id);
  } else {
    enqueue(jobs_.back());
  }
  return id;
}

void ClusterModel::enqueue(Record& r) {
  r.out.state = JobState::Pending;
  r.out.queued_at = clock_;
  if (parent_done(r.job)) r.out.eligible_at = clock_;
  pending_.push_back(r.out.id);
  dirty_ = true;
  emit(EventKind::Submit, r);
}

void ClusterModel::start(Record& r) {
  used_cores_ += r.job.cores;
  if (used_cores_ > total_cores_) throw std::logic_error("capacity exceeded");
  r.out.state = JobState::Running;
  r.out.started_at = clock_;
  r.out.waited = clock_ - *r.out.eligible_at;
  r.planned_end = clock_ + r.job.runtime.value_or(r.job.walltime);
  running_.push_back(r.out.id);
  push(r.planned_end, Internal::Complete, r.out.id);
  emit(EventKind::Start, r);
}

void ClusterModel::finish(Record& r, bool cancelled) {
  const bool was_running = r.out.state == JobState::Running;
  r.out.state = cancelled ? JobState::Cancelled : JobState::Completed;
  r.out.cancelled = cancelled;
  r.out.ended_at = clock_;
  if (was_running) {
    used_cores_ -= r.job.cores;
    r.out.charged_core_seconds = static_cast<std::int64_t>(r.job.cores) * (clock_ - *r.out.started_at);
    std::erase(running_, r.out.id);
  } else {
    std::erase(pending_, r.out.id);
  }
  for (JobId pid : pending_) {
    auto& p = rec(pid);
    if (p.job.depends_on == r.out.id && !p.out.eligible_at) p.out.eligible_at = clock_;
  }
  dirty_ = true;
  emit(cancelled ? EventKind::Cancel : EventKind::End, r);
}

void ClusterModel::cancel(JobId id) {
  auto& r = rec(id);
  switch (r.out.state) {
    case JobState::Completed:
    case JobState::Cancelled:
      throw std::logic_error("job " + std::to_string(id) + " already ended");
    case JobState::Scheduled:
      r.out.state = JobState::Cancelled;
      r.out.cancelled = true;
      r.out.ended_at = clock_;
      emit(EventKind::Cancel, r);
      return;
    case JobState::Pending:
    case JobState::Running:
      finish(r, true);
      return;
  }
}

void ClusterModel::release(JobId id, Seconds end_time) {
  auto& r = rec(id);
  if (r.out.state != JobState::Running) throw std::logic_error("only running jobs can be released");
  if (end_time < clock_ || end_time > *r.out.started_at + r.job.walltime) {
    throw std::invalid_argument("release time must lie in [now, start + walltime]");
  }
  r.planned_end = end_time;
  push(end_time, Internal::Complete, id);
}

void ClusterModel::process(const Queued& ev) {
  switch (ev.kind) {
    case Internal::Arrival: {
      const auto a = *next_arrival_;
      Job job{a.cores, a.walltime, a.runtime, clock_, std::nullopt, Owner::Background};
      submit(job);
      schedule_next_arrival();
      break;
    }
    case Internal::Submit: {
      auto& r = rec(ev.job);
      if (r.out.state == JobState::Scheduled) enqueue(r);
      break;
    }
    case Internal::Complete: {
      auto& r = rec(ev.job);
      if (r.out.state == JobState::Running && r.planned_end == ev.time) finish(r, false);
      break;
    }
  }
}

void ClusterModel::schedule_pass() {
  dirty_ = false;
  int free = total_cores_ - used_cores_;
  std::vector<JobId> eligible;
  for (JobId id : pending_) {
    if (rec(id).out.eligible_at) eligible.push_back(id);
  }
  if (eligible.empty()) return;

  std::size_t i = 0;
  for (; i < eligible.size(); ++i) {
    auto& r = rec(eligible[i]);
    if (r.job.cores > free) break;
    start(r);
    free -= r.job.cores;
  }

  if (i < eligible.size()) {
    // EASY: reserve the head's earliest start, then backfill behind it.
    const auto& head = rec(eligible[i]);
    std::vector<std::pair<Seconds, int>> ends;
    ends.reserve(running_.size());
    for (JobId id : running_) {
      const auto& r = rec(id);
      ends.emplace_back(*r.out.started_at + r.job.walltime, r.job.cores);
    }
    std::sort(ends.begin(), ends.end());
    int avail = free;
    Seconds shadow = std::numeric_limits<Seconds>::max();
    int extra = 0;
    for (const auto& [end, cores] : ends) {
      avail += cores;
      if (avail >= head.job.cores) {
        shadow = end;
        extra = avail - head.job.cores;
        break;
      }
    }
    for (std::size_t j = i + 1; j < eligible.size(); ++j) {
      auto& r = rec(eligible[j]);
      if (r.job.cores > free) continue;
      const bool ends_before = clock_ + r.job.walltime <= shadow;
      if (!ends_before && r.job.cores > extra) continue;
      start(r);
      free -= r.job.cores;
      if (!ends_before) extra -= r.job.cores;
    }
  }
  std::erase_if(pending_, [this](JobId id) { return rec(id).out.state != JobState::Pending; });
}

std::vector<SimEvent> ClusterModel::run_until(Seconds time) {
  if (time < clock_) throw std::invalid_argument("run_until cannot move the clock backwards");
  if (dirty_) schedule_pass();
  while (!events_.empty() && events_.top().time <= time) {
    const Seconds t = events_.top().time;
    clock_ = t;
    while (!events_.empty() && events_.top().time == t) {
      const Queued ev = events_.top();
      events_.pop();
      process(ev);
    }
    schedule_pass();
  }
  clock_ = time;
  std::vector<SimEvent> out;
  out.swap(outbox_);
  return out;
}

std::optional<Seconds> ClusterModel::next_event_time() const {
  if (dirty_) return clock_;
  if (events_.empty()) return std::nullopt;
  return events_.top().time;
}

Seconds ClusterModel::probe_wait_time(int cores, Seconds walltime) const {
  if (cores > total_cores_) throw UnsatisfiableJob("probe larger than the cluster");
  ClusterModel sim = *this;
  sim.background_ = BackgroundSource{};
  sim.next_arrival_.reset();
  sim.trace_enabled_ = false;
  sim.outbox_.clear();
  // Only completions of work already on the machine remain.
  decltype(events_) kept;
  while (!sim.events_.empty()) {
    if (sim.events_.top().kind == Internal::Complete) kept.push(sim.events_.top());
    sim.events_.pop();
  }
  sim.events_ = std::move(kept);

  const JobId probe = sim.submit(Job{cores, walltime, walltime, clock_, std::nullopt, Owner::Foreground});
  sim.run_until(sim.clock());
  while (sim.rec(probe).out.state == JobState::Pending) {
    const auto next = sim.next_event_time();
    if (!next) throw std::logic_error("probe job can never start");
    sim.run_until(*next);
  }
  return *sim.rec(probe).out.started_at - clock_;
}

void ClusterModel::write_trace_csv(std::ostream& out) const {
  out << "time,event_kind,job_id,cores,owner\n";
  for (const auto& e : trace_) {
    out << e.time << ',' << to_string(e.kind) << ',' << e.job << ',' << e.cores << ','
        << to_string(e.owner) << '\n';
  }
}

}  // namespace asa
