#include "asa/learner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace asa {

namespace {

constexpr double kSimplexTolerance = 1e-9;
// Above this exponent magnitude the update is evaluated in log space.
constexpr double kLogSpaceThreshold = 30.0;

void normalize(std::vector<double>& p) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::logic_error("probability vector lost all mass");
  }
  for (double& x : p) x /= total;
}

}  // namespace

Policy Policy::tuned(int repetitions) {
  if (repetitions < 1) throw std::invalid_argument("tuned repetitions must be >= 1");
  return {Kind::Tuned, repetitions};
}

Policy Policy::parse(std::string_view text) {
  if (text == "default") return default_policy();
  if (text == "greedy") return greedy();
  if (text == "tuned") return tuned(50);
  constexpr std::string_view prefix = "tuned:";
  if (text.starts_with(prefix)) {
    const auto digits = text.substr(prefix.size());
    int r = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), r);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
      throw std::invalid_argument("malformed tuned repetition count: " + std::string(text));
    }
    return tuned(r);
  }
  throw std::invalid_argument("unknown policy: " + std::string(text));
}

std::string Policy::name() const {
  switch (kind) {
    case Kind::Default: return "default";
    case Kind::Greedy: return "greedy";
    case Kind::Tuned: return "tuned:" + std::to_string(repetitions);
  }
  return "default";
}

GammaSchedule GammaSchedule::fixed(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("gamma must be positive");
  GammaSchedule g;
  g.constant = value;
  return g;
}

double GammaSchedule::at(std::uint64_t completed_rounds, std::size_t actions) const {
  if (constant) return *constant;
  const double rounds = static_cast<double>(std::max<std::uint64_t>(1, completed_rounds));
  const double decayed = scale * std::sqrt(std::log(static_cast<double>(actions)) / rounds);
  return std::max(floor, std::min(scale, decayed));
}

Learner::Learner(ActionGrid grid, std::uint64_t seed, GammaSchedule gamma)
    : s_{.grid = std::move(grid),
         .p = {},
         .round_losses = {},
         .per_action_cumulative = {},
         .pending = std::nullopt,
         .gamma = gamma,
         .seed = seed,
         .rng = Rng(seed)} {
  const std::size_t m = s_.grid.size();
  if (m < 2) throw std::invalid_argument("learner needs at least two alternatives");
  s_.p.assign(m, 1.0 / static_cast<double>(m));
  s_.round_losses.assign(m, 0.0);
  s_.per_action_cumulative.assign(m, 0.0);
}

Learner::Learner(LearnerState state) : s_(std::move(state)) {}

Learner Learner::from_state(LearnerState state) {
  const std::size_t m = state.grid.size();
  if (m < 2) throw std::invalid_argument("learner needs at least two alternatives");
  if (state.p.size() != m || state.round_losses.size() != m ||
      state.per_action_cumulative.size() != m) {
    throw std::invalid_argument("learner state vectors do not match the grid");
  }
  double total = 0.0;
  for (double x : state.p) {
    if (!(x >= 0.0)) throw std::invalid_argument("probabilities must be non-negative");
    total += x;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("probabilities must sum to 1");
  }
  for (double x : state.round_losses) {
    if (!(x >= 0.0)) throw std::invalid_argument("round losses must be non-negative");
  }
  if (state.eta > state.step) throw std::invalid_argument("more rounds than steps");
  if (state.pending && *state.pending >= m) throw std::invalid_argument("pending action out of range");
  return Learner(std::move(state));
}

ActionIndex Learner::sample_action(const Policy& policy) {
  if (policy.kind == Policy::Kind::Greedy) {
    const auto& cum = s_.per_action_cumulative;
    return static_cast<ActionIndex>(std::min_element(cum.begin(), cum.end()) - cum.begin());
  }
  const double u = s_.rng.uniform01();
  double acc = 0.0;
  ActionIndex last_positive = 0;
  for (ActionIndex a = 0; a < s_.p.size(); ++a) {
    if (s_.p[a] <= 0.0) continue;
    last_positive = a;
    acc += s_.p[a];
    if (u < acc) return a;
  }
  // Rounding left u above the accumulated mass.
  return last_positive;
}

void Learner::record_loss(ActionIndex action, double loss_value) {
  if (action >= s_.grid.size()) throw std::out_of_range("action index out of range");
  if (!(loss_value >= 0.0 && loss_value <= 1.0)) {
    throw std::invalid_argument("loss must lie in [0, 1]");
  }
  s_.per_action_cumulative[action] += loss_value;
  accumulate(action, loss_value);
}

void Learner::observe_true_wait(Seconds true_wait, const Policy& policy) {
  if (!s_.pending) throw std::logic_error("observe_true_wait without a pending estimate");
  observe_true_wait(*s_.pending, true_wait, policy);
}

void Learner::observe_true_wait(ActionIndex estimated, Seconds true_wait, const Policy& policy) {
  if (estimated >= s_.grid.size()) throw std::out_of_range("action index out of range");
  if (true_wait < 0) throw std::invalid_argument("true wait must be non-negative");
  if (s_.pending == estimated) s_.pending.reset();
  score_step(estimated, true_wait);
  if (policy.kind == Policy::Kind::Tuned) {
    for (int r = 0; r < policy.repetitions; ++r) {
      score_step(sample_action(Policy::default_policy()), true_wait);
    }
  }
}

Estimate Learner::estimate(const Policy& policy) {
  const ActionIndex a = sample_action(policy);
  s_.pending = a;
  return {a, s_.grid[a]};
}

RegretCheck Learner::regret_bound_check(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const auto& cum = s_.per_action_cumulative;
  const double best = *std::min_element(cum.begin(), cum.end());
  const double m = static_cast<double>(s_.grid.size());
  const double t = static_cast<double>(s_.step);
  const double lhs = s_.cumulative_loss - best;
  const double rhs = 4.0 * static_cast<double>(s_.eta) + std::log(m) +
                     std::sqrt(2.0 * t * std::log(m / delta));
  return {lhs, rhs, lhs <= rhs};
}

void Learner::score_step(ActionIndex action, Seconds true_wait) {
  // Under the binary loss every alternative but the closest one loses 1.
  const ActionIndex best = closest_action(s_.grid, true_wait);
  for (double& c : s_.per_action_cumulative) c += 1.0;
  s_.per_action_cumulative[best] -= 1.0;
  accumulate(action, action == best ? 0.0 : 1.0);
}

void Learner::accumulate(ActionIndex action, double loss_value) {
  s_.round_losses[action] += loss_value;
  s_.cumulative_loss += loss_value;
  ++s_.step;
  if (*std::max_element(s_.round_losses.begin(), s_.round_losses.end()) > 1.0) close_round();
}

void Learner::close_round() {
  const double gamma = current_gamma();
  const double worst = gamma * *std::max_element(s_.round_losses.begin(), s_.round_losses.end());
  if (worst > kLogSpaceThreshold) {
    std::vector<double> logw(s_.p.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < s_.p.size(); ++a) {
      logw[a] = s_.p[a] > 0.0 ? std::log(s_.p[a]) - gamma * s_.round_losses[a]
                              : -std::numeric_limits<double>::infinity();
      top = std::max(top, logw[a]);
    }
    for (std::size_t a = 0; a < s_.p.size(); ++a) s_.p[a] = std::exp(logw[a] - top);
  } else {
    for (std::size_t a = 0; a < s_.p.size(); ++a) s_.p[a] *= std::exp(-gamma * s_.round_losses[a]);
  }
  normalize(s_.p);
  std::fill(s_.round_losses.begin(), s_.round_losses.end(), 0.0);
  ++s_.eta;
}

nlohmann::json Learner::to_json() const {
  nlohmann::json gamma = {{"scale", s_.gamma.scale}, {"floor", s_.gamma.floor}};
  gamma["constant"] = s_.gamma.constant ? nlohmann::json(*s_.gamma.constant) : nlohmann::json();
  std::vector<Seconds> grid(s_.grid.values().begin(), s_.grid.values().end());
  return {
      {"version", kStateVersion},
      {"grid", grid},
      {"p", s_.p},
      {"round_losses", s_.round_losses},
      {"per_action_cumulative", s_.per_action_cumulative},
      {"eta", s_.eta},
      {"step", s_.step},
      {"cumulative_loss", s_.cumulative_loss},
      {"pending", s_.pending ? nlohmann::json(*s_.pending) : nlohmann::json()},
      {"gamma", gamma},
      {"seed", s_.seed},
      {"rng_state", s_.rng.serialize()},
  };
}

Learner Learner::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != kStateVersion) {
      throw std::invalid_argument("unsupported learner state version");
    }
    GammaSchedule gamma;
    const auto& g = doc.at("gamma");
    gamma.scale = g.at("scale").get<double>();
    gamma.floor = g.at("floor").get<double>();
    if (!g.at("constant").is_null()) gamma.constant = g.at("constant").get<double>();
    LearnerState state{
        .grid = ActionGrid(doc.at("grid").get<std::vector<Seconds>>()),
        .p = doc.at("p").get<std::vector<double>>(),
        .round_losses = doc.at("round_losses").get<std::vector<double>>(),
        .per_action_cumulative = doc.at("per_action_cumulative").get<std::vector<double>>(),
        .eta = doc.at("eta").get<std::uint64_t>(),
        .step = doc.at("step").get<std::uint64_t>(),
        .cumulative_loss = doc.at("cumulative_loss").get<double>(),
        .pending = std::nullopt,
        .gamma = gamma,
        .seed = doc.at("seed").get<std::uint64_t>(),
        .rng = Rng::deserialize(doc.at("rng_state").get<std::string>()),
    };
    if (!doc.at("pending").is_null()) state.pending = doc.at("pending").get<ActionIndex>();
    return from_state(std::move(state));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed learner state: ") + e.what());
  }
}

}  // namespace asa
