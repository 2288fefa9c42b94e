#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "asa/action_space.hpp"

namespace asa {

struct StageSpec {
  std::string name;
  Seconds runtime = 1;
  int cores = 1;

  bool operator==(const StageSpec&) const = default;
};

/// An ordered chain of stages; stage i starts only after stage i-1 ends.
class WorkflowSpec {
 public:
  /// Throws std::invalid_argument on an empty chain, a non-positive runtime or
  /// a stage with fewer than one core.
  WorkflowSpec(std::string name, std::vector<StageSpec> stages);

  const std::string& name() const noexcept { return name_; }
  const std::vector<StageSpec>& stages() const noexcept { return stages_; }
  int peak_cores() const noexcept { return peak_cores_; }

  bool operator==(const WorkflowSpec&) const = default;

 private:
  std::string name_;
  std::vector<StageSpec> stages_;
  int peak_cores_ = 0;
};

/// Sum of stage runtimes.
Seconds total_runtime(const WorkflowSpec& wf);

/// Names accepted by builtin_profile().
inline constexpr std::string_view kBuiltinProfileNames[] = {"montage", "blast", "statistics"};

/// Montage-like, BLAST-like and Statistics-like chains. Parallel stages use
/// `scale_cores`, sequential stages one core. Runtimes are synthetic.
/// Throws std::invalid_argument for scale_cores < 4.
std::vector<WorkflowSpec> builtin_profiles(int scale_cores);

/// One builtin profile by name; throws std::invalid_argument for unknown names.
WorkflowSpec builtin_profile(std::string_view name, int scale_cores);

}  // namespace asa
