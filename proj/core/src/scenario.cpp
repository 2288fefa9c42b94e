#include "asa/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace asa {

namespace {

using Keys = std::set<std::string>;

void check_keys(const YAML::Node& node, const std::string& where, const Keys& allowed) {
  if (!node.IsMap()) throw ConfigError(fmt::format("{}: expected a mapping", where));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <typename T>
T read(const YAML::Node& node, const std::string& where) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("{}: bad value '{}'", where, YAML::Dump(node)));
  }
}

template <typename T>
void read_into(const YAML::Node& parent, const char* key, const std::string& where, T& out) {
  if (const auto n = parent[key]) out = read<T>(n, where + "." + key);
}

template <typename T>
std::vector<T> read_list(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ConfigError(where + ": expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(read<T>(node[i], fmt::format("{}[{}]", where, i)));
  return out;
}

template <typename T>
std::pair<T, T> read_range(const YAML::Node& node, const std::string& where) {
  const auto v = read_list<T>(node, where);
  if (v.size() != 2) throw ConfigError(where + ": expected [min, max]");
  return {v[0], v[1]};
}

Policy read_policy(const YAML::Node& node, const std::string& where) {
  try {
    return Policy::parse(read<std::string>(node, where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
}

std::vector<StrategyKind> read_strategies(const YAML::Node& node, const std::string& where, const Policy& p) {
  std::vector<StrategyKind> out;
  for (const auto& name : read_list<std::string>(node, where)) {
    try {
      out.push_back(StrategyKind::parse(name, p));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("{}: {}", where, e.what()));
    }
  }
  return out;
}

void parse_cluster(const YAML::Node& n, ClusterConfig& c) {
  const std::string w = "cluster";
  check_keys(n, w, {"total_cores", "warmup_s", "frozen_horizon_s", "frozen_trace", "export_event_traces", "regimes"});
  read_into(n, "total_cores", w, c.total_cores);
  read_into(n, "warmup_s", w, c.warmup_s);
  read_into(n, "frozen_horizon_s", w, c.frozen_horizon_s);
  read_into(n, "frozen_trace", w, c.frozen_trace);
  read_into(n, "export_event_traces", w, c.export_event_traces);
  if (const auto rs = n["regimes"]) {
    if (!rs.IsSequence()) throw ConfigError("cluster.regimes: expected a list");
    c.regimes.clear();
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto r = rs[i];
      const auto rw = fmt::format("cluster.regimes[{}]", i);
      check_keys(r, rw, {"start_s", "arrivals_per_hour", "cores", "walltime_s", "runtime_fraction"});
      BackgroundRegime reg;
      read_into(r, "start_s", rw, reg.start);
      read_into(r, "arrivals_per_hour", rw, reg.arrivals_per_hour);
      if (r["cores"]) std::tie(reg.min_cores, reg.max_cores) = read_range<int>(r["cores"], rw + ".cores");
      if (r["walltime_s"]) {
        std::tie(reg.min_walltime, reg.max_walltime) = read_range<Seconds>(r["walltime_s"], rw + ".walltime_s");
      }
      if (r["runtime_fraction"]) {
        std::tie(reg.min_runtime_fraction, reg.max_runtime_fraction) =
            read_range<double>(r["runtime_fraction"], rw + ".runtime_fraction");
      }
      c.regimes.push_back(reg);
    }
  }
}

void parse_workflows(const YAML::Node& n, ScenarioConfig& cfg) {
  const std::string w = "workflows";
  check_keys(n, w, {"builtin", "custom", "scales"});
  if (n["builtin"]) cfg.workflows = read_list<std::string>(n["builtin"], w + ".builtin");
  if (n["scales"]) cfg.scales = read_list<int>(n["scales"], w + ".scales");
  if (const auto cs = n["custom"]) {
    if (!cs.IsSequence()) throw ConfigError("workflows.custom: expected a list");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto cw = fmt::format("workflows.custom[{}]", i);
      check_keys(cs[i], cw, {"name", "stages"});
      CustomWorkflow wf;
      read_into(cs[i], "name", cw, wf.name);
      const auto st = cs[i]["stages"];
      if (!st || !st.IsSequence()) throw ConfigError(cw + ".stages: expected a list");
      for (std::size_t k = 0; k < st.size(); ++k) {
        const auto sw = fmt::format("{}.stages[{}]", cw, k);
        check_keys(st[k], sw, {"name", "runtime_s", "cores"});
        CustomStage s;
        s.name = fmt::format("stage{}", k + 1);
        read_into(st[k], "name", sw, s.name);
        read_into(st[k], "runtime_s", sw, s.runtime_s);
        if (const auto c = st[k]["cores"]) {
          if (c.IsScalar() && c.Scalar() == "scale") {
            s.cores.reset();
          } else {
            s.cores = read<int>(c, sw + ".cores");
          }
        } else {
          s.cores = 1;
        }
        wf.stages.push_back(s);
      }
      cfg.custom_workflows.push_back(std::move(wf));
    }
  }
}

void parse_convergence(const YAML::Node& n, ConvergenceConfig& c) {
  const std::string w = "convergence";
  check_keys(n, w, {"iterations", "changepoints", "levels", "level_range_s", "window", "policies"});
  read_into(n, "iterations", w, c.iterations);
  read_into(n, "window", w, c.window);
  if (n["changepoints"]) c.changepoints = read_list<int>(n["changepoints"], w + ".changepoints");
  if (n["levels"]) c.levels = read_list<Seconds>(n["levels"], w + ".levels");
  if (n["level_range_s"]) std::tie(c.level_min_s, c.level_max_s) = read_range<double>(n["level_range_s"], w + ".level_range_s");
  if (const auto ps = n["policies"]) {
    if (!ps.IsSequence()) throw ConfigError(w + ".policies: expected a list");
    c.policies.clear();
    for (std::size_t i = 0; i < ps.size(); ++i) c.policies.push_back(read_policy(ps[i], fmt::format("{}.policies[{}]", w, i)));
  }
}

void parse_accuracy(const YAML::Node& n, AccuracyConfig& c, const Policy& p) {
  const std::string w = "accuracy";
  check_keys(n, w, {"repetitions", "interval_s", "geometries", "include_workflows", "strategies"});
  read_into(n, "repetitions", w, c.repetitions);
  read_into(n, "interval_s", w, c.interval_s);
  read_into(n, "include_workflows", w, c.include_workflows);
  if (n["strategies"]) c.strategies = read_strategies(n["strategies"], w + ".strategies", p);
  if (const auto gs = n["geometries"]) {
    if (!gs.IsSequence()) throw ConfigError(w + ".geometries: expected a list");
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const auto gw = fmt::format("{}.geometries[{}]", w, i);
      check_keys(gs[i], gw, {"cores", "walltime_s", "predecessor_s"});
      Geometry g;
      read_into(gs[i], "cores", gw, g.cores);
      read_into(gs[i], "walltime_s", gw, g.walltime_s);
      read_into(gs[i], "predecessor_s", gw, g.predecessor_s);
      c.geometries.push_back(g);
    }
  }
}

void parse_regret(const YAML::Node& n, RegretConfig& c) {
  const std::string w = "regret";
  check_keys(n, w, {"steps", "deltas", "runs", "policy"});
  read_into(n, "steps", w, c.steps);
  read_into(n, "runs", w, c.runs);
  if (n["policy"]) c.policy = read_policy(n["policy"], w + ".policy");
  if (n["deltas"]) c.deltas = read_list<double>(n["deltas"], w + ".deltas");
}

}  // namespace

WorkflowSpec CustomWorkflow::at_scale(int scale_cores) const {
  std::vector<StageSpec> out;
  for (const auto& s : stages) out.push_back({s.name, s.runtime_s, s.cores.value_or(scale_cores)});
  return WorkflowSpec(name, std::move(out));
}

std::vector<WorkflowSpec> ScenarioConfig::workflows_at(int scale_cores) const {
  std::vector<WorkflowSpec> out;
  for (const auto& name : workflows) out.push_back(builtin_profile(name, scale_cores));
  for (const auto& c : custom_workflows) out.push_back(c.at_scale(scale_cores));
  return out;
}

void ScenarioConfig::override_policy(const Policy& p) {
  policy = p;
  for (auto& s : strategies) s.policy = p;
  for (auto& s : accuracy.strategies) s.policy = p;
  convergence.policies = {p};
  regret.policy = p;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (seeds.empty()) fail("at least one seed is required");
  if (cluster.total_cores < 1) fail("cluster.total_cores must be >= 1");
  if (cluster.warmup_s < 0) fail("cluster.warmup_s must be >= 0");
  if (cluster.frozen_horizon_s < 1) fail("cluster.frozen_horizon_s must be >= 1");
  try {
    if (!cluster.regimes.empty()) validate_regimes(cluster.regimes, cluster.total_cores);
  } catch (const std::invalid_argument& e) {
    fail(std::string("cluster.regimes: ") + e.what());
  }
  if (scales.empty()) fail("workflows.scales must not be empty");
  for (int s : scales) {
    if (s < 4) fail(fmt::format("workflows.scales: {} is below the minimum of 4", s));
  }
  for (const auto& name : workflows) {
    if (std::find(std::begin(kBuiltinProfileNames), std::end(kBuiltinProfileNames), name) ==
        std::end(kBuiltinProfileNames)) {
      fail("workflows.builtin: unknown profile " + name);
    }
  }
  for (const auto& c : custom_workflows) {
    if (c.name.empty()) fail("workflows.custom: every workflow needs a name");
    try {
      (void)c.at_scale(scales.front());
    } catch (const std::invalid_argument& e) {
      fail(fmt::format("workflows.custom '{}': {}", c.name, e.what()));
    }
  }
  if (workflows.empty() && custom_workflows.empty()) fail("no workflows configured");
  if (strategies.empty()) fail("strategies must not be empty");
  if (naive_grace_s < 0) fail("naive_grace_s must be >= 0");
  if (submission_gap_s < 0) fail("submission_gap_s must be >= 0");
  if (gamma.constant && !(*gamma.constant > 0.0)) fail("learner.gamma.constant must be positive");
  if (!(gamma.scale > 0.0) || !(gamma.floor > 0.0) || gamma.floor > gamma.scale) {
    fail("learner.gamma: need 0 < floor <= scale");
  }

  const auto& cv = convergence;
  if (cv.iterations < 1) fail("convergence.iterations must be >= 1");
  if (cv.changepoints.empty() || cv.changepoints.front() != 0) fail("convergence.changepoints must start at 0");
  for (std::size_t i = 1; i < cv.changepoints.size(); ++i) {
    if (cv.changepoints[i] <= cv.changepoints[i - 1]) fail("convergence.changepoints must be strictly increasing");
  }
  if (cv.changepoints.back() >= cv.iterations) fail("convergence.changepoints must lie inside the run");
  if (!cv.levels.empty() && cv.levels.size() != cv.changepoints.size()) {
    fail("convergence.levels needs one level per changepoint");
  }
  for (auto l : cv.levels) {
    if (l < 0) fail("convergence.levels must be >= 0");
  }
  if (!(cv.level_min_s > 0.0) || cv.level_max_s < cv.level_min_s) fail("convergence.level_range_s is invalid");
  if (cv.window < 1) fail("convergence.window must be >= 1");
  if (cv.policies.empty()) fail("convergence.policies must not be empty");

  if (accuracy.repetitions < 1) fail("accuracy.repetitions must be >= 1");
  if (accuracy.interval_s < 0) fail("accuracy.interval_s must be >= 0");
  for (const auto& g : accuracy.geometries) {
    if (g.cores < 1 || g.walltime_s < 1 || g.predecessor_s < 1) fail("accuracy.geometries: values must be >= 1");
  }
  for (const auto& s : accuracy.strategies) {
    if (!s.is_asa()) fail("accuracy.strategies: only asa and asa_naive make predictions");
  }

  if (regret.steps < 0) fail("regret.steps must be >= 0");
  if (regret.runs < 100) fail("regret.runs must be >= 100");
  for (double d : regret.deltas) {
    if (!(d > 0.0 && d < 1.0)) fail("regret.deltas must lie in (0, 1)");
  }
}

std::vector<BackgroundRegime> default_regimes() {
  BackgroundRegime r;
  r.start = 0;
  r.arrivals_per_hour = 20.0;
  r.min_cores = 1;
  r.max_cores = 64;
  r.min_walltime = 600;
  r.max_walltime = 7200;
  return {r};
}

ScenarioConfig parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid YAML: ") + e.what());
  }
  ScenarioConfig cfg;
  if (root.IsNull()) return cfg;
  check_keys(root, "config",
             {"seed", "seeds", "output_dir", "cluster", "grid", "learner", "workflows", "strategies",
              "naive_grace_s", "submission_gap_s", "convergence", "accuracy", "regret"});

  if (root["seed"] && root["seeds"]) throw ConfigError("config: give either seed or seeds");
  if (root["seed"]) cfg.seeds = {read<std::uint64_t>(root["seed"], "seed")};
  if (root["seeds"]) cfg.seeds = read_list<std::uint64_t>(root["seeds"], "seeds");
  read_into(root, "output_dir", "config", cfg.output_dir);
  read_into(root, "naive_grace_s", "config", cfg.naive_grace_s);
  read_into(root, "submission_gap_s", "config", cfg.submission_gap_s);

  if (root["cluster"]) parse_cluster(root["cluster"], cfg.cluster);
  if (root["grid"]) {
    try {
      cfg.grid = ActionGrid(read_list<Seconds>(root["grid"], "grid"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }
  if (const auto l = root["learner"]) {
    check_keys(l, "learner", {"policy", "gamma"});
    if (l["policy"]) cfg.policy = read_policy(l["policy"], "learner.policy");
    if (const auto g = l["gamma"]) {
      check_keys(g, "learner.gamma", {"scale", "floor", "constant"});
      read_into(g, "scale", "learner.gamma", cfg.gamma.scale);
      read_into(g, "floor", "learner.gamma", cfg.gamma.floor);
      if (g["constant"]) cfg.gamma.constant = read<double>(g["constant"], "learner.gamma.constant");
    }
  }
  cfg.strategies = {StrategyKind::big_job(), StrategyKind::per_stage(), StrategyKind::asa(cfg.policy)};
  cfg.accuracy.strategies = {StrategyKind::asa(cfg.policy), StrategyKind::asa_naive(cfg.policy)};
  if (root["workflows"]) parse_workflows(root["workflows"], cfg);
  if (root["strategies"]) cfg.strategies = read_strategies(root["strategies"], "strategies", cfg.policy);
  if (root["convergence"]) parse_convergence(root["convergence"], cfg.convergence);
  if (root["accuracy"]) parse_accuracy(root["accuracy"], cfg.accuracy, cfg.policy);
  if (root["regret"]) parse_regret(root["regret"], cfg.regret);

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

}  // namespace asa
