#include "asa/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace asa {

namespace {

// Sub-stream ids for mix_seed.
constexpr std::uint64_t kOracleStream = 0;
constexpr std::uint64_t kLearnerStream = 1;
constexpr std::uint64_t kTraceStream = 2;
constexpr std::uint64_t kLiveStream = 16;
constexpr std::uint64_t kBankStream = 32;
constexpr std::uint64_t kRegretStream = 64;

std::uint64_t strategy_stream(const StrategyKind& s) { return static_cast<std::uint64_t>(s.kind); }

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return m;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

ActionIndex window_mode(std::span<const ActionIndex> window) {
  std::map<ActionIndex, int> counts;
  for (auto a : window) ++counts[a];
  ActionIndex best = 0;
  int best_count = -1;
  for (const auto& [a, c] : counts) {  // ascending, so ties keep the smaller index
    if (c > best_count) {
      best = a;
      best_count = c;
    }
  }
  return best;
}

// Background stream for one (seed, strategy): a shared frozen trace, or a
// live generator seeded per strategy.
class BackgroundFactory {
 public:
  BackgroundFactory(const ClusterConfig& c, std::uint64_t seed) : cfg_(c), seed_(seed) {
    if (c.frozen_trace && !c.regimes.empty()) {
      trace_ = std::make_shared<const BackgroundTrace>(
          generate_trace(c.regimes, mix_seed(seed, kTraceStream), c.frozen_horizon_s));
    }
  }

  ClusterModel warmed(const StrategyKind& s) const {
    BackgroundSource src;
    if (trace_) {
      src = BackgroundSource::replay(trace_);
    } else if (!cfg_.regimes.empty()) {
      src = BackgroundSource::live(cfg_.regimes, mix_seed(seed_, kLiveStream + strategy_stream(s)));
    }
    ClusterModel cluster(cfg_.total_cores, std::move(src));
    cluster.run_until(cfg_.warmup_s);
    return cluster;
  }

 private:
  const ClusterConfig& cfg_;
  std::uint64_t seed_;
  std::shared_ptr<const BackgroundTrace> trace_;
};

void check_fits(const WorkflowSpec& wf, int total_cores) {
  for (const auto& st : wf.stages()) {
    if (st.cores > total_cores) {
      throw UnsatisfiableJob(fmt::format("workflow {} stage {} needs {} cores but the cluster has {}", wf.name(),
                                         st.name, st.cores, total_cores));
    }
  }
}

}  // namespace

OracleSchedule::OracleSchedule(std::vector<std::pair<int, Seconds>> points) : points_(std::move(points)) {
  if (points_.empty() || points_.front().first != 0) {
    throw std::invalid_argument("oracle schedule must start at iteration 0");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].second < 0) throw std::invalid_argument("oracle waits must be >= 0");
    if (i > 0 && points_[i].first <= points_[i - 1].first) {
      throw std::invalid_argument("oracle changepoints must be strictly increasing");
    }
  }
}

Seconds OracleSchedule::at(int iteration) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), iteration,
                             [](int i, const auto& p) { return i < p.first; });
  return std::prev(it)->second;
}

OracleSchedule random_oracle_schedule(const ActionGrid& grid, std::uint64_t seed, const std::vector<int>& changepoints,
                                      double lo, double hi) {
  Rng rng(mix_seed(seed, kOracleStream));
  std::vector<std::pair<int, Seconds>> points;
  while (points.size() < changepoints.size()) {
    const auto w = static_cast<Seconds>(std::llround(rng.log_uniform(lo, hi)));
    if (!points.empty() && closest_action(grid, w) == closest_action(grid, points.back().second)) continue;
    points.emplace_back(changepoints[points.size()], w);
  }
  return OracleSchedule(std::move(points));
}

OracleSchedule oracle_schedule(const ConvergenceConfig& cfg, const ActionGrid& grid, std::uint64_t seed) {
  if (cfg.levels.empty()) return random_oracle_schedule(grid, seed, cfg.changepoints, cfg.level_min_s, cfg.level_max_s);
  std::vector<std::pair<int, Seconds>> points;
  for (std::size_t i = 0; i < cfg.changepoints.size(); ++i) points.emplace_back(cfg.changepoints[i], cfg.levels[i]);
  return OracleSchedule(std::move(points));
}

ConvergenceSeries run_convergence_series(const ActionGrid& grid, const OracleSchedule& oracle, const Policy& policy,
                                         std::uint64_t learner_seed, int iterations, GammaSchedule gamma) {
  Learner learner(grid, learner_seed, gamma);
  ConvergenceSeries s;
  s.policy = policy;
  for (int i = 0; i < iterations; ++i) {
    const Seconds w = oracle.at(i);
    const Estimate est = learner.estimate(policy);
    learner.observe_true_wait(w, policy);
    s.actions.push_back(est.action);
    s.estimates.push_back(est.wait);
    s.true_waits.push_back(w);
    s.losses.push_back(loss(grid, est.action, w));
    s.p_best.push_back(learner.state().p[closest_action(grid, w)]);
  }
  return s;
}

std::vector<int> reconvergence_times(const ConvergenceSeries& s, const OracleSchedule& oracle,
                                     const ActionGrid& grid, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const int n = static_cast<int>(s.actions.size());
  const auto& pts = oracle.points();
  std::vector<int> out;
  for (std::size_t k = 0; k < pts.size() && pts[k].first < n; ++k) {
    const int begin = pts[k].first;
    const int end = k + 1 < pts.size() ? std::min(n, pts[k + 1].first) : n;
    const ActionIndex best = closest_action(grid, pts[k].second);
    int found = end - begin + 1;
    for (int i = begin; i < end; ++i) {
      const int from = std::max(0, i + 1 - window);
      if (window_mode(std::span(s.actions).subspan(from, i + 1 - from)) == best) {
        found = i - begin + 1;
        break;
      }
    }
    out.push_back(found);
  }
  return out;
}

std::optional<bool> frozen_after_downward(const ConvergenceSeries& s, const OracleSchedule& oracle, int iterations) {
  const auto& pts = oracle.points();
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (pts[k].second >= pts[k - 1].second) continue;
    const int begin = pts[k].first;
    const int end = std::min(iterations, k + 1 < pts.size() ? pts[k + 1].first : iterations);
    if (begin >= end || begin == 0) return std::nullopt;
    const ActionIndex before = s.actions[begin - 1];
    for (int i = begin; i < end; ++i) {
      if (s.actions[i] != before) return false;
    }
    return true;
  }
  return std::nullopt;
}

ConvergenceResult run_convergence(const ScenarioConfig& cfg) {
  const auto& cv = cfg.convergence;
  ConvergenceResult r;
  for (auto seed : cfg.seeds) {
    r.schedules.push_back(oracle_schedule(cv, cfg.grid, seed));
    for (const auto& p : cv.policies) {
      // Every policy sees the same learner seed, so differences come from the policy alone.
      auto s = run_convergence_series(cfg.grid, r.schedules.back(), p, mix_seed(seed, kLearnerStream), cv.iterations,
                                      cfg.gamma);
      s.seed = seed;
      r.series.push_back(std::move(s));
    }
  }
  return r;
}

nlohmann::json ConvergenceResult::summary(const ScenarioConfig& cfg) const {
  const auto& cv = cfg.convergence;
  nlohmann::json seeds = nlohmann::json::array();
  std::map<std::string, std::vector<double>> all_times;
  std::map<std::string, std::vector<int>> per_seed_times;
  int frozen = 0;
  int with_downward = 0;
  std::size_t idx = 0;
  for (std::size_t si = 0; si < schedules.size(); ++si) {
    nlohmann::json entry;
    entry["seed"] = series[idx].seed;
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& [it, w] : schedules[si].points()) levels.push_back({{"iteration", it}, {"true_wait_s", w}});
    entry["levels"] = levels;
    std::map<std::string, std::vector<int>> times;
    for (std::size_t p = 0; p < cv.policies.size(); ++p, ++idx) {
      const auto& s = series[idx];
      const auto t = reconvergence_times(s, schedules[si], cfg.grid, cv.window);
      const auto name = s.policy.name();
      times[name] = t;
      entry["reconvergence"][name] = t;
      for (int x : t) all_times[name].push_back(x);
      if (s.policy.kind == Policy::Kind::Greedy) {
        const auto f = frozen_after_downward(s, schedules[si], cv.iterations);
        entry["greedy_frozen_after_downward"] = f ? nlohmann::json(*f) : nlohmann::json(nullptr);
        if (f) {
          ++with_downward;
          frozen += *f ? 1 : 0;
        }
      }
    }
    // Segments where a tuned policy beat the default one.
    if (times.contains("default")) {
      for (const auto& [name, t] : times) {
        if (name.rfind("tuned", 0) != 0) continue;
        int faster = 0;
        for (std::size_t k = 0; k < t.size(); ++k) faster += t[k] < times["default"][k] ? 1 : 0;
        entry["tuned_faster_segments"][name] = faster;
      }
    }
    seeds.push_back(entry);
  }
  nlohmann::json medians;
  for (const auto& [name, xs] : all_times) medians[name] = median(xs);
  return {{"schema", "asa.convergence_summary/1"},
          {"iterations", cv.iterations},
          {"window", cv.window},
          {"median_reconvergence", medians},
          {"greedy_frozen_seeds", frozen},
          {"seeds_with_downward_changepoint", with_downward},
          {"seeds", seeds}};
}

void write_convergence_csv(std::ostream& out, const ConvergenceResult& r) {
  out << "# schema: asa.convergence/1\n";
  out << "seed,iteration,policy,estimate_s,true_wait_s,loss,p_best\n";
  for (const auto& s : r.series) {
    const auto name = s.policy.name();
    for (std::size_t i = 0; i < s.estimates.size(); ++i) {
      out << fmt::format("{},{},{},{},{},{},{:.6f}\n", s.seed, i, name, s.estimates[i], s.true_waits[i],
                         static_cast<int>(s.losses[i]), s.p_best[i]);
    }
  }
}

std::vector<RegretRun> run_regret(const ScenarioConfig& cfg) {
  const auto& rc = cfg.regret;
  const int steps = rc.steps;
  std::vector<int> changepoints;
  for (int k = 0; k < 5; ++k) {
    const int at = steps * k / 5;
    if (changepoints.empty() || at > changepoints.back()) changepoints.push_back(at);
  }
  std::vector<RegretRun> out;
  for (auto base : cfg.seeds) {
    for (int run = 0; run < rc.runs; ++run) {
      const std::uint64_t seed = mix_seed(base, kRegretStream + static_cast<std::uint64_t>(run));
      const std::pair<std::string, OracleSchedule> schedules[] = {
          {"stationary", random_oracle_schedule(cfg.grid, seed, {0}, cfg.convergence.level_min_s,
                                                cfg.convergence.level_max_s)},
          {"changepoint", random_oracle_schedule(cfg.grid, seed, changepoints, cfg.convergence.level_min_s,
                                                 cfg.convergence.level_max_s)},
      };
      for (const auto& [name, oracle] : schedules) {
        Learner learner(cfg.grid, mix_seed(seed, kLearnerStream), cfg.gamma);
        for (int i = 0; i < steps; ++i) {
          (void)learner.estimate(rc.policy);
          learner.observe_true_wait(oracle.at(i), rc.policy);
        }
        for (double delta : rc.deltas) {
          out.push_back({seed, name, delta, learner.regret_bound_check(delta), learner.state().eta,
                         learner.state().step});
        }
      }
    }
  }
  return out;
}

void write_regret_csv(std::ostream& out, const std::vector<RegretRun>& runs) {
  out << "# schema: asa.regret/1\n";
  out << "seed,schedule,delta,steps,eta,lhs,rhs,holds\n";
  for (const auto& r : runs) {
    out << fmt::format("{},{},{},{},{},{:.6f},{:.6f},{}\n", r.seed, r.schedule, r.delta, r.steps, r.eta, r.check.lhs,
                       r.check.rhs, r.check.holds ? 1 : 0);
  }
}

nlohmann::json regret_summary(const std::vector<RegretRun>& runs) {
  std::map<std::pair<std::string, double>, std::pair<int, int>> tally;  // violations, total
  std::map<std::pair<std::string, double>, double> worst;
  for (const auto& r : runs) {
    auto& [v, n] = tally[{r.schedule, r.delta}];
    v += r.check.holds ? 0 : 1;
    ++n;
    auto& w = worst[{r.schedule, r.delta}];
    if (r.check.rhs > 0) w = std::max(w, r.check.lhs / r.check.rhs);
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, vn] : tally) {
    rows.push_back({{"schedule", key.first},
                    {"delta", key.second},
                    {"runs", vn.second},
                    {"violations", vn.first},
                    {"violation_fraction", static_cast<double>(vn.first) / vn.second},
                    {"max_lhs_over_rhs", worst[key]}});
  }
  return {{"schema", "asa.regret_summary/1"}, {"results", rows}};
}

CompareResult run_compare(const ScenarioConfig& cfg) {
  CompareResult result;
  result.learners = nlohmann::json::object();
  for (int scale : cfg.scales) {
    for (const auto& wf : cfg.workflows_at(scale)) check_fits(wf, cfg.cluster.total_cores);
  }
  for (auto seed : cfg.seeds) {
    const BackgroundFactory background(cfg.cluster, seed);
    for (const auto& strategy : cfg.strategies) {
      ClusterModel stream = background.warmed(strategy);
      LearnerBank bank(cfg.grid, mix_seed(seed, kBankStream + strategy_stream(strategy)), cfg.gamma);
      Seconds release = cfg.cluster.warmup_s;
      for (int scale : cfg.scales) {
        for (const auto& wf : cfg.workflows_at(scale)) {
          stream.run_until(release);
          // Each cell gets its own copy of the shared background stream, so
          // workflows of one seed never compete with each other.
          ClusterModel cluster = stream;
          cluster.set_trace_enabled(cfg.cluster.export_event_traces);
          auto driver = make_driver(wf, strategy, &bank, release, cfg.naive_grace_s);
          WorkflowDriver* drivers[] = {driver.get()};
          run_drivers(cluster, drivers);

          WorkflowRun run = driver->result();
          run.scale_cores = scale;
          run.seed = seed;
          result.reports.push_back(make_report(run, scale, seed));
          result.runs.push_back(std::move(run));
          if (cfg.cluster.export_event_traces) {
            result.event_logs.push_back(
                {fmt::format("{}_{}_{}_{}", seed, strategy.name(), wf.name(), scale), cluster.trace()});
          }
          release += cfg.submission_gap_s;
        }
      }
      if (strategy.is_asa()) {
        nlohmann::json states = nlohmann::json::array();
        for (const auto& [key, learner] : bank.learners()) {
          states.push_back({{"cores", key.first}, {"walltime_bucket", key.second}, {"state", learner.to_json()}});
        }
        result.learners[std::to_string(seed)][strategy.name()] = states;
      }
    }
  }
  result.normalized = normalized_averages(result.reports);
  return result;
}

std::vector<AccuracyRow> run_accuracy(const ScenarioConfig& cfg) {
  const auto& ac = cfg.accuracy;
  struct Target {
    WorkflowSpec wf;
    int cores;
  };
  std::vector<Target> targets;
  if (ac.include_workflows) {
    for (int scale : cfg.scales) {
      for (auto& wf : cfg.workflows_at(scale)) targets.push_back({std::move(wf), scale});
    }
  }
  for (const auto& g : ac.geometries) {
    WorkflowSpec wf(fmt::format("geometry_{}x{}", g.cores, g.walltime_s),
                    {{"predecessor", g.predecessor_s, 1}, {"job", g.walltime_s, g.cores}});
    targets.push_back({std::move(wf), g.cores});
  }
  for (const auto& t : targets) check_fits(t.wf, cfg.cluster.total_cores);

  std::vector<AccuracyRow> rows;
  for (auto seed : cfg.seeds) {
    const BackgroundFactory background(cfg.cluster, seed);
    for (const auto& strategy : ac.strategies) {
      LearnerBank bank(cfg.grid, mix_seed(seed, kBankStream + strategy_stream(strategy)), cfg.gamma);
      for (const auto& t : targets) {
        ClusterModel cluster = background.warmed(strategy);
        std::vector<std::unique_ptr<WorkflowDriver>> owned;
        std::vector<WorkflowDriver*> drivers;
        for (int r = 0; r < ac.repetitions; ++r) {
          owned.push_back(
              make_driver(t.wf, strategy, &bank, cfg.cluster.warmup_s + r * ac.interval_s, cfg.naive_grace_s));
          drivers.push_back(owned.back().get());
        }
        run_drivers(cluster, drivers);

        std::vector<double> real, predicted, perceived;
        AccuracyRow row;
        row.seed = seed;
        row.geometry = t.wf.name();
        row.cores = t.cores;
        row.strategy = strategy.name();
        std::size_t misses = 0;
        std::int64_t overhead = 0;
        for (const auto* d : drivers) {
          const auto& run = d->result();
          for (std::size_t i = 0; i < run.predictions.size(); ++i) {
            const auto& tr = run.traces[i + 1];
            real.push_back(static_cast<double>(run.predictions[i].realized_wait));
            predicted.push_back(static_cast<double>(run.predictions[i].estimate));
            perceived.push_back(static_cast<double>(tr.perceived_wait));
            misses += tr.resubmissions > 0 ? 1 : 0;
            row.resubmissions += tr.resubmissions;
            overhead += tr.overhead_core_seconds;
          }
        }
        row.predictions = real.size();
        const auto rw = mean_std(real), pw = mean_std(predicted), cw = mean_std(perceived);
        row.real_wait_mean = rw.mean;
        row.real_wait_std = rw.stddev;
        row.predicted_mean = pw.mean;
        row.predicted_std = pw.stddev;
        row.perceived_mean = cw.mean;
        row.perceived_std = cw.stddev;
        if (row.predictions > 0) {
          row.miss_ratio = static_cast<double>(misses) / static_cast<double>(row.predictions);
          row.hit_ratio = 1.0 - row.miss_ratio;
        }
        row.overhead_hours = static_cast<double>(overhead) / 3600.0;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_accuracy_csv(std::ostream& out, const std::vector<AccuracyRow>& rows) {
  out << "# schema: asa.accuracy/1\n";
  out << "seed,geometry,cores,strategy,predictions,real_wt_mean_s,real_wt_std_s,predicted_wt_mean_s,"
         "predicted_wt_std_s,pwt_mean_s,pwt_std_s,hit_ratio,miss_ratio,overhead_hours,resubmissions\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.4f},{:.4f},{:.4f},{}\n", r.seed,
                       r.geometry, r.cores, r.strategy, r.predictions, r.real_wait_mean, r.real_wait_std,
                       r.predicted_mean, r.predicted_std, r.perceived_mean, r.perceived_std, r.hit_ratio,
                       r.miss_ratio, r.overhead_hours, r.resubmissions);
  }
}

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << text;
}

}  // namespace asa
