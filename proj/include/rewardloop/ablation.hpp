#ifndef REWARDLOOP_ABLATION_HPP
#define REWARDLOOP_ABLATION_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rewardloop/protocol.hpp"
#include "rewardloop/report.hpp"

namespace rewardloop {

struct LadderStep {
  std::string name;
  RewardFlags flags;
};

/// "default": none, +pammd, +vm, +rc, +csca (cumulative).
/// "leave_one_out": all, then all without each reward in turn.
std::vector<LadderStep> named_ladder(const std::string& name);

/// Called after each run with its step, seed and report.
using RunCallback = std::function<void(const LadderStep&, std::uint64_t, const RunReport&)>;

/// Runs every (step, seed) pair, seeds varying fastest within a step.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const std::vector<LadderStep>& ladder,
                                      const std::vector<std::uint64_t>& seeds, const RunCallback& on_run = {});

/// Median of the final-session accuracy of every row with this ladder step.
double median_final_accuracy(const std::vector<AblationRow>& rows, const std::string& step);

}  // namespace rewardloop

#endif  // REWARDLOOP_ABLATION_HPP
