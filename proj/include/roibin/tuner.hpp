#ifndef ROIBIN_TUNER_HPP
#define ROIBIN_TUNER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "roibin/pipeline.hpp"

namespace roibin {

struct TuneDimension {
  std::string name;
  int lo = 1;
  int hi = 1;
  bool is_task = false;
};

using Assignment = std::vector<int>;

struct TuneSpace {
  std::vector<TuneDimension> dims;

  // tasks in [1, 40]; roi, bin, codec and lossless threads in [1, 8].
  static TuneSpace defaults();

  void validate() const;
  std::uint64_t size() const;
  // Product of the non-task ranges; 1 when every dimension is a task dimension.
  std::uint64_t non_task_size() const;
  bool contains(const Assignment& a) const;
};

struct TuneBudget {
  std::uint64_t max_evals = 8;
  bool early_stop = false;

  // max(8, ceil(sqrt(n))) with n the size of the non-task space.
  static TuneBudget for_space(const TuneSpace& space);
};

struct Trial {
  Assignment assignment;
  double seconds = 0.0;  // median of the repeated measurements
  bool feasible = true;
};

struct TunedAllocation {
  Assignment assignment;
  double objective = 0.0;
  std::vector<Trial> trials;
};

using Objective = std::function<double(const Assignment&)>;

// Evaluates at most budget.max_evals distinct assignments, each measured
// `repeats` times (median kept). Spaces no larger than the budget are
// enumerated; otherwise a Latin-hypercube spread uses half the budget and the
// rest refines around the incumbent, jumping to the minimizer of a separable
// quadratic fit when it is unexplored and taking coordinate steps otherwise.
// An objective that throws marks its assignment infeasible.
TunedAllocation tune(const TuneSpace& space, const Objective& objective, const TuneBudget& budget,
                     std::uint64_t seed, int repeats = 3);

// Most frequent assignment; ties go to the lowest mean objective, then to the
// lexicographically smallest assignment.
Assignment aggregate_mode(std::span<const TunedAllocation> runs);

// Maps dimensions named tasks/roi/bin/codec/lossless onto a ThreadAlloc.
ThreadAlloc to_thread_alloc(const TuneSpace& space, const Assignment& a, ThreadAlloc base = {});

// Wall seconds of one compress() under the assignment's thread allocation.
Objective compress_objective(const BatchView& batch, const PeakList& peaks, const RoibinConfig& cfg,
                             const TuneSpace& space);

struct TuningRecord {
  TuneSpace space;
  TunedAllocation result;
  std::uint64_t seed = 0;
  std::string host;
};

std::string host_descriptor();
std::string tuning_to_json(const TuningRecord& record);
TuningRecord tuning_from_json(const std::string& text);

}  // namespace roibin

#endif  // ROIBIN_TUNER_HPP
