#include "asa/workflow.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace asa {

WorkflowSpec::WorkflowSpec(std::string name, std::vector<StageSpec> stages)
    : name_(std::move(name)), stages_(std::move(stages)) {
  if (stages_.empty()) throw std::invalid_argument("workflow '" + name_ + "' has no stages");
  for (const auto& s : stages_) {
    if (s.runtime <= 0) throw std::invalid_argument("stage '" + s.name + "' runtime must be > 0");
    if (s.cores < 1) throw std::invalid_argument("stage '" + s.name + "' needs at least one core");
    peak_cores_ = std::max(peak_cores_, s.cores);
  }
}

Seconds total_runtime(const WorkflowSpec& wf) {
  return std::accumulate(wf.stages().begin(), wf.stages().end(), Seconds{0},
                         [](Seconds acc, const StageSpec& s) { return acc + s.runtime; });
}

namespace {

struct ProfileStage {
  const char* name;
  Seconds runtime;
  bool parallel;
};

// Parallel stages run 300-600 s, sequential ones 60-120 s.
constexpr ProfileStage kMontage[] = {
    {"mProject", 480, true},   {"mDiffFit", 360, true}, {"mConcatFit", 60, false},
    {"mBgModel", 90, false},   {"mBackground", 300, true}, {"mImgtbl", 60, false},
    {"mAdd", 120, false},      {"mShrink", 90, false},  {"mJPEG", 60, false},
};
constexpr ProfileStage kBlast[] = {
    {"blastall", 600, true},
    {"merge", 120, false},
};
constexpr ProfileStage kStatistics[] = {
    {"partition", 90, false},
    {"partial_stats", 540, true},
    {"gather", 60, false},
    {"aggregate", 420, true},
};

template <std::size_t N>
WorkflowSpec make_profile(const char* name, const ProfileStage (&stages)[N], int scale_cores) {
  std::vector<StageSpec> out;
  out.reserve(N);
  for (const auto& s : stages) out.push_back({s.name, s.runtime, s.parallel ? scale_cores : 1});
  return WorkflowSpec(name, std::move(out));
}

}  // namespace

WorkflowSpec builtin_profile(std::string_view name, int scale_cores) {
  if (scale_cores < 4) throw std::invalid_argument("scale_cores must be >= 4");
  if (name == "montage") return make_profile("montage", kMontage, scale_cores);
  if (name == "blast") return make_profile("blast", kBlast, scale_cores);
  if (name == "statistics") return make_profile("statistics", kStatistics, scale_cores);
  throw std::invalid_argument("unknown builtin workflow: " + std::string(name));
}

std::vector<WorkflowSpec> builtin_profiles(int scale_cores) {
  std::vector<WorkflowSpec> out;
  for (auto name : kBuiltinProfileNames) out.push_back(builtin_profile(name, scale_cores));
  return out;
}

}  // namespace asa
