#include "asa/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asa {

StrategyKind StrategyKind::parse(std::string_view text, Policy policy) {
  if (text == "big_job") return big_job();
  if (text == "per_stage") return per_stage();
  if (text == "asa") return asa(policy);
  if (text == "asa_naive") return asa_naive(policy);
  throw std::invalid_argument("unknown strategy: " + std::string(text));
}

std::string StrategyKind::name() const {
  switch (kind) {
    case Kind::BigJob: return "big_job";
    case Kind::PerStage: return "per_stage";
    case Kind::Asa: return "asa";
    case Kind::AsaNaive: return "asa_naive";
  }
  return "unknown";
}

LearnerBank::LearnerBank(ActionGrid grid, std::uint64_t seed, GammaSchedule gamma)
    : grid_(std::move(grid)), seed_(seed), gamma_(gamma) {}

int LearnerBank::walltime_bucket(Seconds walltime) {
  if (walltime < 1) throw std::invalid_argument("walltime must be positive");
  const Seconds minutes = (walltime + 59) / 60;
  int k = 0;
  while ((Seconds{1} << k) < minutes) ++k;
  return k;
}

Learner& LearnerBank::at(int cores, Seconds walltime) {
  const std::pair<int, int> key{cores, walltime_bucket(walltime)};
  auto it = learners_.find(key);
  if (it == learners_.end()) {
    const std::uint64_t stream = (static_cast<std::uint64_t>(key.first) << 16) ^ static_cast<std::uint64_t>(key.second);
    it = learners_.emplace(key, Learner(grid_, mix_seed(seed_, stream), gamma_)).first;
  }
  return it->second;
}

WorkflowDriver::WorkflowDriver(WorkflowSpec wf, StrategyKind strategy, Seconds release_at)
    : wf_(std::move(wf)) {
  run_.workflow = wf_.name();
  run_.strategy = strategy;
  run_.released_at = release_at;
  run_.traces.resize(wf_.stages().size());
  for (std::size_t i = 0; i < wf_.stages().size(); ++i) run_.traces[i].stage = wf_.stages()[i].name;
}

void WorkflowDriver::begin(ClusterModel& cluster) {
  begun_ = true;
  run_.released_at = cluster.clock();
  on_begin(cluster);
}

namespace {

class BigJobDriver final : public WorkflowDriver {
 public:
  BigJobDriver(WorkflowSpec wf, Seconds release_at)
      : WorkflowDriver(std::move(wf), StrategyKind::big_job(), release_at) {}

  void on_event(ClusterModel& cluster, const SimEvent& ev) override {
    if (ev.job != job_) return;
    if (ev.kind == EventKind::Start) {
      Seconds t = ev.time;
      for (std::size_t i = 0; i < wf_.stages().size(); ++i) {
        auto& tr = run_.traces[i];
        const auto& st = wf_.stages()[i];
        tr.submit_time = run_.released_at;
        tr.alloc_ready_time = ev.time;
        tr.stage_start = t;
        tr.stage_end = t + st.runtime;
        tr.perceived_wait = i == 0 ? ev.time - run_.released_at : 0;
        tr.raw_wait = i == 0 ? ev.time - run_.released_at : 0;
        tr.charged_core_seconds = static_cast<std::int64_t>(wf_.peak_cores()) * st.runtime;
        t += st.runtime;
      }
    } else if (ev.kind == EventKind::End) {
      done_ = true;
      (void)cluster;
    }
  }

 protected:
  void on_begin(ClusterModel& cluster) override {
    const Seconds total = total_runtime(wf_);
    job_ = cluster.submit(Job{wf_.peak_cores(), total, total, cluster.clock(), std::nullopt, Owner::Foreground});
  }

 private:
  JobId job_ = 0;
};

class PerStageDriver final : public WorkflowDriver {
 public:
  PerStageDriver(WorkflowSpec wf, Seconds release_at)
      : WorkflowDriver(std::move(wf), StrategyKind::per_stage(), release_at) {}

  void on_event(ClusterModel& cluster, const SimEvent& ev) override {
    if (ev.job != job_) return;
    auto& tr = run_.traces[current_];
    if (ev.kind == EventKind::Start) {
      tr.alloc_ready_time = ev.time;
      tr.stage_start = ev.time;
      tr.raw_wait = ev.time - tr.submit_time;
      const Seconds prev_end = current_ == 0 ? run_.released_at : run_.traces[current_ - 1].stage_end;
      tr.perceived_wait = ev.time - prev_end;
    } else if (ev.kind == EventKind::End) {
      tr.stage_end = ev.time;
      tr.charged_core_seconds = cluster.outcome(job_).charged_core_seconds;
      if (++current_ < wf_.stages().size()) {
        submit_current(cluster);
      } else {
        done_ = true;
      }
    }
  }

 protected:
  void on_begin(ClusterModel& cluster) override { submit_current(cluster); }

 private:
  void submit_current(ClusterModel& cluster) {
    const auto& st = wf_.stages()[current_];
    run_.traces[current_].submit_time = cluster.clock();
    job_ = cluster.submit(Job{st.cores, st.runtime, st.runtime, cluster.clock(), std::nullopt, Owner::Foreground});
  }

  std::size_t current_ = 0;
  JobId job_ = 0;
};

class AsaDriver final : public WorkflowDriver {
 public:
  AsaDriver(WorkflowSpec wf, StrategyKind strategy, LearnerBank& bank, Seconds release_at, Seconds grace)
      : WorkflowDriver(std::move(wf), strategy, release_at), bank_(bank), grace_(grace) {
    if (!strategy.is_asa()) throw std::invalid_argument("ASA driver needs an asa or asa_naive strategy");
    if (grace_ < 0) throw std::invalid_argument("grace window must be >= 0");
    stages_.resize(wf_.stages().size());
    stage_ended_.assign(wf_.stages().size(), false);
    run_.predictions.resize(wf_.stages().size() - 1);
  }

  void on_event(ClusterModel& cluster, const SimEvent& ev) override {
    for (std::size_t y = 0; y < stages_.size(); ++y) {
      if (stages_[y].job != ev.job) continue;
      if (ev.kind == EventKind::Start) on_alloc(cluster, y, ev.time);
      if (ev.kind == EventKind::End) on_stage_end(cluster, y, ev.time);
      return;
    }
  }

  std::optional<Seconds> next_timer() const override {
    if (idle_stage_) return stages_[*idle_stage_].grace_deadline;
    return std::nullopt;
  }

  void on_timer(ClusterModel& cluster) override {
    if (!idle_stage_) return;
    const std::size_t y = *idle_stage_;
    auto& s = stages_[y];
    if (cluster.clock() < s.grace_deadline) return;
    // Allocation arrived too early: give it back and queue again.
    cluster.cancel(s.job);
    const auto charged = cluster.outcome(s.job).charged_core_seconds;
    auto& tr = run_.traces[y];
    tr.overhead_core_seconds += charged;
    tr.charged_core_seconds += charged;
    ++tr.resubmissions;
    idle_stage_.reset();
    submit_stage(cluster, y, cluster.clock());
  }

 protected:
  void on_begin(ClusterModel& cluster) override {
    run_.traces[0].submit_time = cluster.clock();
    submit_stage(cluster, 0, cluster.clock());
  }

 private:
  struct StageState {
    JobId job = 0;
    Seconds attempt_submit = 0;
    bool held = false;
    bool observed = false;
    ActionIndex action = 0;
    Learner* learner = nullptr;
    Seconds grace_deadline = 0;
  };

  void submit_stage(ClusterModel& cluster, std::size_t y, Seconds at) {
    const auto& st = wf_.stages()[y];
    auto& s = stages_[y];
    Job job{st.cores, st.runtime, st.runtime, at, std::nullopt, Owner::Foreground};
    if (y > 0 && run_.strategy.use_dependencies()) {
      job.depends_on = stages_[y - 1].job;
    } else if (y > 0) {
      // Without dependencies the allocation may arrive before the stage can
      // use it; hold it open and end it explicitly.
      job.runtime.reset();
      job.walltime = st.runtime + grace_;
    }
    s.held = !job.runtime.has_value();
    s.attempt_submit = at;
    s.job = cluster.submit(job);
  }

  void on_alloc(ClusterModel& cluster, std::size_t y, Seconds now) {
    auto& s = stages_[y];
    auto& tr = run_.traces[y];
    tr.alloc_ready_time = now;
    tr.raw_wait = now - s.attempt_submit;
    if (y > 0 && !s.observed) {
      const Seconds waited = now - tr.submit_time;
      s.learner->observe_true_wait(s.action, waited, run_.strategy.policy);
      run_.predictions[y - 1].realized_wait = waited;
      s.observed = true;
    }
    const bool predecessor_done = y == 0 || stage_ended_[y - 1];
    if (predecessor_done) {
      begin_work(cluster, y, now);
    } else {
      s.grace_deadline = now + grace_;
      idle_stage_ = y;
    }
  }

  void begin_work(ClusterModel& cluster, std::size_t y, Seconds now) {
    auto& s = stages_[y];
    auto& tr = run_.traces[y];
    const auto& st = wf_.stages()[y];
    tr.stage_start = now;
    const Seconds prev_end = y == 0 ? run_.released_at : run_.traces[y - 1].stage_end;
    tr.perceived_wait = std::max<Seconds>(0, now - prev_end);
    tr.overhead_core_seconds += static_cast<std::int64_t>(st.cores) * (now - tr.alloc_ready_time);
    if (s.held) cluster.release(s.job, now + st.runtime);
    if (y + 1 < stages_.size()) plan_next(cluster, y + 1, now + st.runtime);
  }

  void plan_next(ClusterModel& cluster, std::size_t y, Seconds predecessor_deadline) {
    const auto& st = wf_.stages()[y];
    auto& s = stages_[y];
    s.learner = &bank_.at(st.cores, st.runtime);
    const Estimate est = s.learner->estimate(run_.strategy.policy);
    s.action = est.action;
    run_.predictions[y - 1].estimate = est.wait;
    const Seconds at = std::max(cluster.clock(), predecessor_deadline - est.wait);
    run_.traces[y].submit_time = at;
    submit_stage(cluster, y, at);
  }

  void on_stage_end(ClusterModel& cluster, std::size_t y, Seconds now) {
    auto& tr = run_.traces[y];
    tr.stage_end = now;
    tr.charged_core_seconds += cluster.outcome(stages_[y].job).charged_core_seconds;
    stage_ended_[y] = true;
    if (y + 1 == stages_.size()) {
      done_ = true;
      return;
    }
    if (idle_stage_ == y + 1) {
      idle_stage_.reset();
      begin_work(cluster, y + 1, now);
    }
  }

  LearnerBank& bank_;
  Seconds grace_;
  std::vector<StageState> stages_;
  std::vector<bool> stage_ended_;
  std::optional<std::size_t> idle_stage_;
};

}  // namespace

std::unique_ptr<WorkflowDriver> make_big_job_driver(WorkflowSpec wf, Seconds release_at) {
  return std::make_unique<BigJobDriver>(std::move(wf), release_at);
}

std::unique_ptr<WorkflowDriver> make_per_stage_driver(WorkflowSpec wf, Seconds release_at) {
  return std::make_unique<PerStageDriver>(std::move(wf), release_at);
}

std::unique_ptr<WorkflowDriver> make_asa_driver(WorkflowSpec wf, StrategyKind strategy, LearnerBank& bank,
                                                Seconds release_at, Seconds naive_grace) {
  return std::make_unique<AsaDriver>(std::move(wf), strategy, bank, release_at, naive_grace);
}

std::unique_ptr<WorkflowDriver> make_driver(WorkflowSpec wf, StrategyKind strategy, LearnerBank* bank,
                                            Seconds release_at, Seconds naive_grace) {
  switch (strategy.kind) {
    case StrategyKind::Kind::BigJob: return make_big_job_driver(std::move(wf), release_at);
    case StrategyKind::Kind::PerStage: return make_per_stage_driver(std::move(wf), release_at);
    case StrategyKind::Kind::Asa:
    case StrategyKind::Kind::AsaNaive:
      if (bank == nullptr) throw std::invalid_argument("ASA strategies need a learner bank");
      return make_asa_driver(std::move(wf), strategy, *bank, release_at, naive_grace);
  }
  throw std::invalid_argument("unknown strategy");
}

void run_drivers(ClusterModel& cluster, std::span<WorkflowDriver* const> drivers) {
  auto dispatch = [&](const std::vector<SimEvent>& events) {
    for (const auto& ev : events) {
      if (ev.owner != Owner::Foreground) continue;
      for (auto* d : drivers) {
        if (d->begun() && !d->done()) d->on_event(cluster, ev);
      }
    }
  };
  auto all_done = [&] {
    return std::all_of(drivers.begin(), drivers.end(), [](const WorkflowDriver* d) { return d->done(); });
  };

  for (;;) {
    for (bool progressed = true; progressed;) {
      progressed = false;
      const Seconds now = cluster.clock();
      for (auto* d : drivers) {
        if (!d->begun() && d->release_time() <= now) {
          d->begin(cluster);
          progressed = true;
        }
      }
      for (auto* d : drivers) {
        if (!d->begun() || d->done()) continue;
        if (const auto t = d->next_timer(); t && *t <= now) {
          d->on_timer(cluster);
          progressed = true;
        }
      }
      const auto events = cluster.run_until(now);
      if (!events.empty()) {
        dispatch(events);
        progressed = true;
      }
    }
    if (all_done()) return;

    std::optional<Seconds> next = cluster.next_event_time();
    auto consider = [&next](Seconds t) { next = next ? std::min(*next, t) : t; };
    for (auto* d : drivers) {
      if (!d->begun()) {
        consider(d->release_time());
      } else if (!d->done()) {
        if (const auto t = d->next_timer()) consider(*t);
      }
    }
    if (!next) throw std::logic_error("simulation stalled with unfinished workflows");
    dispatch(cluster.run_until(std::max(*next, cluster.clock())));
  }
}

std::vector<StageTrace> run_big_job(ClusterModel& cluster, const WorkflowSpec& wf) {
  auto d = make_big_job_driver(wf, cluster.clock());
  WorkflowDriver* ds[] = {d.get()};
  run_drivers(cluster, ds);
  return d->result().traces;
}

std::vector<StageTrace> run_per_stage(ClusterModel& cluster, const WorkflowSpec& wf) {
  auto d = make_per_stage_driver(wf, cluster.clock());
  WorkflowDriver* ds[] = {d.get()};
  run_drivers(cluster, ds);
  return d->result().traces;
}

WorkflowRun run_asa(ClusterModel& cluster, const WorkflowSpec& wf, LearnerBank& bank, const StrategyKind& kind,
                    Seconds naive_grace) {
  auto d = make_asa_driver(wf, kind, bank, cluster.clock(), naive_grace);
  WorkflowDriver* ds[] = {d.get()};
  run_drivers(cluster, ds);
  return d->result();
}

}  // namespace asa
