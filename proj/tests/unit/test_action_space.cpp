#include <gtest/gtest.h>

#include <cstdlib>
#include <limits>
#include <random>

#include "asa/action_space.hpp"

using namespace asa;

TEST(ActionGrid, CanonicalShape) {
  const auto g = canonical_grid();
  ASSERT_EQ(g.size(), 53u);
  EXPECT_EQ(g[0], 10);
  EXPECT_EQ(g[g.size() - 1], 100000);
  std::size_t below_1000 = 0;
  for (auto v : g.values()) below_1000 += v < 1000 ? 1 : 0;
  EXPECT_EQ(below_1000, 27u);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
}

TEST(ActionGrid, RejectsBadValues) {
  EXPECT_THROW(ActionGrid({}), std::invalid_argument);
  EXPECT_THROW(ActionGrid({0, 10}), std::invalid_argument);
  EXPECT_THROW(ActionGrid({10, 10}), std::invalid_argument);
  EXPECT_THROW(ActionGrid({20, 10}), std::invalid_argument);
  EXPECT_NO_THROW(ActionGrid({5}));
}

TEST(ClosestAction, Examples) {
  const auto g = canonical_grid();
  EXPECT_EQ(g[closest_action(g, 0)], 10);
  EXPECT_EQ(g[closest_action(g, 10)], 10);
  EXPECT_EQ(g[closest_action(g, 14)], 10);
  EXPECT_EQ(g[closest_action(g, 15)], 10);  // tie goes down
  EXPECT_EQ(g[closest_action(g, 16)], 20);
  EXPECT_EQ(g[closest_action(g, 975)], 950);
  EXPECT_EQ(g[closest_action(g, 976)], 1000);
  EXPECT_EQ(g[closest_action(g, 10'000'000)], 100000);
  EXPECT_THROW(closest_action(g, -1), std::invalid_argument);
}

TEST(ClosestAction, MatchesBruteForce) {
  const auto g = canonical_grid();
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Seconds> pick(0, 150000);
  for (int n = 0; n < 20000; ++n) {
    const Seconds w = pick(rng);
    std::size_t best = 0;
    Seconds best_d = std::numeric_limits<Seconds>::max();
    for (std::size_t a = 0; a < g.size(); ++a) {
      const Seconds d = std::llabs(g[a] - w);
      if (d < best_d) {
        best = a;
        best_d = d;
      }
    }
    ASSERT_EQ(closest_action(g, w), best) << "w=" << w;
  }
}

TEST(Loss, IsBinary) {
  const auto g = canonical_grid();
  const auto best = closest_action(g, 1234);
  for (std::size_t a = 0; a < g.size(); ++a) {
    EXPECT_DOUBLE_EQ(loss(g, a, 1234), a == best ? 0.0 : 1.0);
  }
}
