#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "asa/learner.hpp"

using namespace asa;

namespace {

// Plain restatement of the round-based exponential-weights update.
struct ReferenceLearner {
  std::vector<double> w;
  std::vector<double> round;
  std::uint64_t eta = 0;
  GammaSchedule gamma;

  ReferenceLearner(std::size_t m, GammaSchedule g) : w(m, 1.0 / m), round(m, 0.0), gamma(g) {}

  void add(std::size_t a, double l) {
    round[a] += l;
    if (*std::max_element(round.begin(), round.end()) <= 1.0) return;
    const double gm = gamma.at(eta, w.size());
    double z = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * std::exp(-gm * round[i]);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] * std::exp(-gm * round[i]) / z;
    std::fill(round.begin(), round.end(), 0.0);
    ++eta;
  }
};

double mass(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

}  // namespace

TEST(Policy, ParseAndName) {
  EXPECT_EQ(Policy::parse("default"), Policy::default_policy());
  EXPECT_EQ(Policy::parse("greedy"), Policy::greedy());
  EXPECT_EQ(Policy::parse("tuned"), Policy::tuned(50));
  EXPECT_EQ(Policy::parse("tuned:7"), Policy::tuned(7));
  EXPECT_EQ(Policy::tuned(7).name(), "tuned:7");
  EXPECT_THROW(Policy::parse("tuned:0"), std::invalid_argument);
  EXPECT_THROW(Policy::parse("tuned:x"), std::invalid_argument);
  EXPECT_THROW(Policy::parse("random"), std::invalid_argument);
}

TEST(GammaSchedule, NonIncreasingAndBounded) {
  const GammaSchedule g;
  double prev = g.at(0, 53);
  EXPECT_DOUBLE_EQ(prev, 6.0);
  for (std::uint64_t eta = 1; eta < 5000; ++eta) {
    const double cur = g.at(eta, 53);
    EXPECT_LE(cur, prev);
    EXPECT_GE(cur, 2.0);
    prev = cur;
  }
  EXPECT_DOUBLE_EQ(GammaSchedule::fixed(0.5).at(1000, 53), 0.5);
  EXPECT_THROW(GammaSchedule::fixed(0.0), std::invalid_argument);
}

TEST(Learner, StartsUniform) {
  Learner l(canonical_grid(), 1);
  for (double p : l.state().p) EXPECT_DOUBLE_EQ(p, 1.0 / 53.0);
  EXPECT_EQ(l.state().eta, 0u);
  EXPECT_EQ(l.state().step, 0u);
  EXPECT_THROW(Learner(ActionGrid({10}), 1), std::invalid_argument);
}

TEST(Learner, RecordLossValidates) {
  Learner l(canonical_grid(), 1);
  EXPECT_THROW(l.record_loss(0, -0.1), std::invalid_argument);
  EXPECT_THROW(l.record_loss(0, 1.5), std::invalid_argument);
  EXPECT_THROW(l.record_loss(0, std::nan("")), std::invalid_argument);
  EXPECT_THROW(l.record_loss(53, 0.5), std::out_of_range);
}

TEST(Learner, RoundClosesOnlyAboveOne) {
  Learner l(ActionGrid({10, 20, 30}), 1);
  l.record_loss(0, 1.0);
  EXPECT_EQ(l.state().eta, 0u);  // exactly 1 does not close
  l.record_loss(1, 1.0);
  EXPECT_EQ(l.state().eta, 0u);
  l.record_loss(0, 0.25);
  EXPECT_EQ(l.state().eta, 1u);
  for (double r : l.state().round_losses) EXPECT_EQ(r, 0.0);
  // Only the action that never lost gains mass.
  EXPECT_GT(l.state().p[2], l.state().p[1]);
  EXPECT_GT(l.state().p[1], l.state().p[0]);
}

TEST(Learner, MatchesReferenceUpdate) {
  for (auto gamma : {GammaSchedule{}, GammaSchedule::fixed(0.7), GammaSchedule::fixed(40.0)}) {
    Learner l(canonical_grid(), 3, gamma);
    ReferenceLearner ref(53, gamma);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> pick(0, 52);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 3000; ++i) {
      const auto a = pick(rng);
      const double x = u(rng);
      l.record_loss(a, x);
      ref.add(a, x);
    }
    ASSERT_EQ(l.state().eta, ref.eta);
    for (std::size_t a = 0; a < 53; ++a) EXPECT_NEAR(l.state().p[a], ref.w[a], 1e-12);
  }
}

TEST(Learner, LargeExponentsStayFinite) {
  Learner l(ActionGrid({10, 20}), 1, GammaSchedule::fixed(1000.0));
  for (int i = 0; i < 10; ++i) l.record_loss(0, 1.0);
  EXPECT_TRUE(std::isfinite(l.state().p[0]));
  EXPECT_NEAR(mass(l.state().p), 1.0, 1e-12);
  EXPECT_GT(l.state().p[1], 0.99);
}

TEST(Learner, SimplexFuzz) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Learner l(canonical_grid(), seed);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, 52);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
      l.record_loss(pick(rng), u(rng));
      ASSERT_NEAR(mass(l.state().p), 1.0, 1e-9);
      for (double p : l.state().p) ASSERT_GE(p, 0.0);
    }
  }
}

TEST(Learner, ObserveRequiresPending) {
  Learner l(canonical_grid(), 1);
  EXPECT_THROW(l.observe_true_wait(100, Policy::default_policy()), std::logic_error);
  l.estimate(Policy::default_policy());
  EXPECT_NO_THROW(l.observe_true_wait(100, Policy::default_policy()));
  EXPECT_THROW(l.observe_true_wait(100, Policy::default_policy()), std::logic_error);
  EXPECT_THROW(l.observe_true_wait(53, 100, Policy::default_policy()), std::out_of_range);
  EXPECT_THROW(l.observe_true_wait(0, -5, Policy::default_policy()), std::invalid_argument);
}

TEST(Learner, HindsightCountsEveryAction) {
  const ActionGrid g({10, 20, 30});
  Learner l(g, 1);
  const auto est = l.estimate(Policy::default_policy());
  l.observe_true_wait(21, Policy::default_policy());
  const auto& cum = l.state().per_action_cumulative;
  EXPECT_EQ(cum[0], 1.0);
  EXPECT_EQ(cum[1], 0.0);
  EXPECT_EQ(cum[2], 1.0);
  EXPECT_EQ(l.state().cumulative_loss, est.action == 1 ? 0.0 : 1.0);
}

TEST(Learner, TunedReplaysCountTowardSteps) {
  Learner l(canonical_grid(), 1);
  l.estimate(Policy::tuned(10));
  l.observe_true_wait(500, Policy::tuned(10));
  EXPECT_EQ(l.state().step, 11u);
}

TEST(Learner, GreedyIsDeterministicAndTiesGoShort) {
  Learner l(ActionGrid({10, 20, 30}), 1);
  const auto rng_before = l.state().rng;
  EXPECT_EQ(l.sample_action(Policy::greedy()), 0u);  // all tied
  EXPECT_EQ(l.state().rng, rng_before);
  l.estimate(Policy::greedy());
  l.observe_true_wait(30, Policy::greedy());
  EXPECT_EQ(l.sample_action(Policy::greedy()), 2u);
}

TEST(Learner, GreedyStaysOnItsFirstOptimum) {
  Learner l(canonical_grid(), 1);
  const auto g = canonical_grid();
  for (int i = 0; i < 200; ++i) {
    l.estimate(Policy::greedy());
    l.observe_true_wait(5000, Policy::greedy());
  }
  const auto old_best = closest_action(g, 5000);
  for (int i = 0; i < 150; ++i) {
    EXPECT_EQ(l.estimate(Policy::greedy()).action, old_best);
    l.observe_true_wait(100, Policy::greedy());
  }
}

TEST(Learner, ConvergesOnStationaryWait) {
  const auto g = canonical_grid();
  Learner l(g, 5);
  for (int i = 0; i < 500; ++i) {
    l.estimate(Policy::default_policy());
    l.observe_true_wait(2600, Policy::default_policy());
  }
  EXPECT_GT(l.state().p[closest_action(g, 2600)], 0.9);
}

TEST(Learner, SameSeedSameSequence) {
  Learner a(canonical_grid(), 42), b(canonical_grid(), 42);
  for (int i = 0; i < 300; ++i) {
    ASSERT_EQ(a.estimate(Policy::default_policy()).action, b.estimate(Policy::default_policy()).action);
    a.observe_true_wait(700, Policy::default_policy());
    b.observe_true_wait(700, Policy::default_policy());
  }
}

TEST(Regret, EmptyHistoryHolds) {
  Learner l(canonical_grid(), 1);
  const auto r = l.regret_bound_check(0.05);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_NEAR(r.rhs, std::log(53.0), 1e-12);
  EXPECT_TRUE(r.holds);
  EXPECT_THROW(l.regret_bound_check(0.0), std::invalid_argument);
  EXPECT_THROW(l.regret_bound_check(1.0), std::invalid_argument);
}

TEST(Regret, BoundGrowsWithSteps) {
  // rhs with eta held fixed, straight from the formula.
  const double m = 53.0, delta = 0.05, eta = 3.0;
  double prev = -1.0;
  for (double t = 0; t < 5000; t += 37) {
    const double rhs = 4.0 * eta + std::log(m) + std::sqrt(2.0 * t * std::log(m / delta));
    EXPECT_GT(rhs, prev);
    prev = rhs;
  }
}

TEST(Regret, LhsIsRealizedMinusBestInHindsight) {
  const ActionGrid g({10, 20, 30});
  Learner l(g, 9);
  double realized = 0.0;
  for (int i = 0; i < 40; ++i) {
    const auto e = l.estimate(Policy::default_policy());
    const Seconds w = i % 4 == 0 ? 10 : 30;
    realized += loss(g, e.action, w);
    l.observe_true_wait(w, Policy::default_policy());
  }
  // Action 2 is best in hindsight: it misses only the 10 iterations at w=10.
  EXPECT_NEAR(l.regret_bound_check(0.5).lhs, realized - 10.0, 1e-12);
}

TEST(LearnerState, JsonRoundTripContinuesIdentically) {
  Learner a(canonical_grid(), 77, GammaSchedule::fixed(1.5));
  for (int i = 0; i < 123; ++i) {
    a.estimate(Policy::default_policy());
    a.observe_true_wait(i % 2 ? 300 : 40000, Policy::default_policy());
  }
  a.estimate(Policy::default_policy());
  Learner b = Learner::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(b.state().pending, a.state().pending);
  EXPECT_EQ(b.state().gamma, a.state().gamma);
  for (int i = 0; i < 50; ++i) {
    a.observe_true_wait(900, Policy::tuned(3));
    b.observe_true_wait(900, Policy::tuned(3));
    ASSERT_EQ(a.estimate(Policy::default_policy()).action, b.estimate(Policy::default_policy()).action);
  }
  EXPECT_EQ(a.state().p, b.state().p);
}

TEST(LearnerState, RejectsBrokenDocuments) {
  Learner a(canonical_grid(), 1);
  auto doc = a.to_json();
  auto bad = doc;
  bad["version"] = 99;
  EXPECT_THROW(Learner::from_json(bad), std::invalid_argument);
  bad = doc;
  bad["p"][0] = 0.5;
  EXPECT_THROW(Learner::from_json(bad), std::invalid_argument);
  bad = doc;
  bad.erase("grid");
  EXPECT_THROW(Learner::from_json(bad), std::invalid_argument);
  bad = doc;
  bad["pending"] = 60;
  EXPECT_THROW(Learner::from_json(bad), std::invalid_argument);
}
