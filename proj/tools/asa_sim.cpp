// asa_sim: experiment driver for the adaptive scheduling simulator.
//
//   asa_sim convergence --config cfg.yaml --out results/
//   asa_sim compare --seed 1,2,3 --frozen-trace
//   asa_sim accuracy --policy tuned:20
//   asa_sim regret

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "asa/cluster.hpp"
#include "asa/experiments.hpp"
#include "asa/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitUnsatisfiable = 3;

struct Options {
  std::string config;
  std::string seeds;
  std::string out;
  std::string policy;
  bool frozen_trace = false;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw asa::ConfigError("--seed: not an integer: '" + item + "'");
    }
  }
  if (seeds.empty()) throw asa::ConfigError("--seed: empty list");
  return seeds;
}

asa::ScenarioConfig resolve(const Options& o) {
  asa::ScenarioConfig cfg = o.config.empty() ? asa::parse_scenario("") : asa::load_scenario(o.config);
  if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.frozen_trace) cfg.cluster.frozen_trace = true;
  if (!o.policy.empty()) {
    try {
      cfg.override_policy(asa::Policy::parse(o.policy));
    } catch (const std::invalid_argument& e) {
      throw asa::ConfigError(std::string("--policy: ") + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

void cmd_convergence(const asa::ScenarioConfig& cfg) {
  const auto r = asa::run_convergence(cfg);
  const auto summary = r.summary(cfg);
  asa::write_file(cfg.output_dir, "convergence.csv", render([&](auto& o) { asa::write_convergence_csv(o, r); }));
  asa::write_file(cfg.output_dir, "convergence_summary.json", summary.dump(2) + "\n");
  std::cout << fmt::format("convergence: {} seeds x {} policies, {} iterations\n", cfg.seeds.size(),
                           cfg.convergence.policies.size(), cfg.convergence.iterations);
  for (const auto& [name, m] : summary["median_reconvergence"].items()) {
    std::cout << fmt::format("  median reconvergence {:>10}: {}\n", name, m.dump());
  }
  std::cout << fmt::format("  greedy frozen after a downward changepoint: {}/{}\n",
                           summary["greedy_frozen_seeds"].get<int>(),
                           summary["seeds_with_downward_changepoint"].get<int>());
}

void cmd_compare(const asa::ScenarioConfig& cfg) {
  const auto r = asa::run_compare(cfg);
  asa::write_file(cfg.output_dir, "reports.csv", render([&](auto& o) { asa::write_reports_csv(o, r.reports); }));
  asa::write_file(cfg.output_dir, "stage_traces.csv", render([&](auto& o) { asa::write_stage_traces_csv(o, r.runs); }));
  asa::write_file(cfg.output_dir, "normalized.csv",
                  render([&](auto& o) { asa::write_normalized_csv(o, r.normalized); }));
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& rep : r.reports) reports.push_back(asa::to_json(rep));
  asa::write_file(cfg.output_dir, "reports.json",
                  nlohmann::json{{"schema", "asa.run_report/1"}, {"reports", reports}}.dump(2) + "\n");
  asa::write_file(cfg.output_dir, "learners.json", r.learners.dump(2) + "\n");
  for (const auto& log : r.event_logs) {
    std::ostringstream out;
    out << "time,event_kind,job_id,cores,owner\n";
    for (const auto& e : log.events) {
      out << fmt::format("{},{},{},{},{}\n", e.time, asa::to_string(e.kind), e.job, e.cores, asa::to_string(e.owner));
    }
    asa::write_file(cfg.output_dir / std::filesystem::path("events"), log.label + ".csv", out.str());
  }
  std::cout << fmt::format("compare: {} runs\n", r.reports.size());
  for (const auto& n : r.normalized) {
    std::cout << fmt::format("  {:<12} {:<10} {:<11} {:+.1f}%\n", n.workflow, n.strategy, asa::metric_name(n.metric),
                             n.percent);
  }
}

void cmd_accuracy(const asa::ScenarioConfig& cfg) {
  const auto rows = asa::run_accuracy(cfg);
  asa::write_file(cfg.output_dir, "accuracy.csv", render([&](auto& o) { asa::write_accuracy_csv(o, rows); }));
  std::cout << fmt::format("accuracy: {} rows\n", rows.size());
  for (const auto& r : rows) {
    std::cout << fmt::format("  seed {} {:<22} {:>4} cores {:<9} WT {:>8.0f} predicted {:>8.0f} PWT {:>7.0f} "
                             "hit {:>5.1f}% OH {:.2f} h\n",
                             r.seed, r.geometry, r.cores, r.strategy, r.real_wait_mean, r.predicted_mean,
                             r.perceived_mean, 100.0 * r.hit_ratio, r.overhead_hours);
  }
}

void cmd_regret(const asa::ScenarioConfig& cfg) {
  const auto runs = asa::run_regret(cfg);
  const auto summary = asa::regret_summary(runs);
  asa::write_file(cfg.output_dir, "regret.csv", render([&](auto& o) { asa::write_regret_csv(o, runs); }));
  asa::write_file(cfg.output_dir, "regret_summary.json", summary.dump(2) + "\n");
  std::cout << "regret:\n";
  for (const auto& row : summary["results"]) {
    std::cout << fmt::format("  {:<11} delta={:<5} violations {}/{}  max lhs/rhs {:.3f}\n",
                             row["schedule"].get<std::string>(), row["delta"].get<double>(),
                             row["violations"].get<int>(), row["runs"].get<int>(),
                             row["max_lhs_over_rhs"].get<double>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive scheduling simulator experiments"};
  app.require_subcommand(1);
  Options opts;
  auto add_common = [&opts](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Scenario YAML file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seeds, "Seed or comma-separated seed list");
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_flag("--frozen-trace", opts.frozen_trace, "Replay one background trace for every strategy");
    sub->add_option("--policy", opts.policy, "default | greedy | tuned:R");
  };
  auto* convergence = app.add_subcommand("convergence", "Learner convergence against a changing oracle");
  auto* compare = app.add_subcommand("compare", "Big Job / Per-Stage / ASA comparison");
  auto* accuracy = app.add_subcommand("accuracy", "Repeated submissions per job geometry");
  auto* regret = app.add_subcommand("regret", "Check the regret bound over many seeds");
  for (auto* sub : {convergence, compare, accuracy, regret}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const auto cfg = resolve(opts);
    if (*convergence) cmd_convergence(cfg);
    if (*compare) cmd_compare(cfg);
    if (*accuracy) cmd_accuracy(cfg);
    if (*regret) cmd_regret(cfg);
  } catch (const asa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const asa::UnsatisfiableJob& e) {
    std::cerr << "unsatisfiable scenario: " << e.what() << '\n';
    return kExitUnsatisfiable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
