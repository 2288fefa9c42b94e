#include <gtest/gtest.h>

#include "asa/workflow.hpp"

using namespace asa;

TEST(WorkflowSpec, Validates) {
  EXPECT_THROW(WorkflowSpec("w", {}), std::invalid_argument);
  EXPECT_THROW(WorkflowSpec("w", {{"a", 0, 1}}), std::invalid_argument);
  EXPECT_THROW(WorkflowSpec("w", {{"a", 10, 0}}), std::invalid_argument);
  const WorkflowSpec wf("w", {{"a", 10, 4}, {"b", 20, 1}});
  EXPECT_EQ(wf.peak_cores(), 4);
  EXPECT_EQ(total_runtime(wf), 30);
}

TEST(Builtins, ShapesFollowTheScale) {
  for (int scale : {4, 28, 640}) {
    const auto all = builtin_profiles(scale);
    ASSERT_EQ(all.size(), 3u);
    for (const auto& wf : all) {
      EXPECT_EQ(wf.peak_cores(), scale);
      bool has_sequential = false;
      for (const auto& s : wf.stages()) {
        EXPECT_TRUE(s.cores == 1 || s.cores == scale);
        has_sequential |= s.cores == 1;
      }
      EXPECT_TRUE(has_sequential) << wf.name();
    }
  }
  EXPECT_EQ(builtin_profile("montage", 28).stages().size(), 9u);
  EXPECT_EQ(builtin_profile("blast", 28).stages().size(), 2u);
  EXPECT_EQ(builtin_profile("statistics", 28).stages().size(), 4u);
}

TEST(Builtins, RejectsBadInput) {
  EXPECT_THROW(builtin_profile("montage", 3), std::invalid_argument);
  EXPECT_THROW(builtin_profile("genome", 28), std::invalid_argument);
}
