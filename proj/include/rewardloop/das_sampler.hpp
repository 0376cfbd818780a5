#ifndef REWARDLOOP_DAS_SAMPLER_HPP
#define REWARDLOOP_DAS_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rewardloop/numerics.hpp"
#include "rewardloop/toy_diffusion.hpp"

namespace rewardloop {

struct Particle {
  FeatureVec x;
  double log_w = 0.0;
  int t = 0;
};

struct SamplerConfig {
  int num_particles = 16;
  /// Reward/fidelity trade-off: target is p_pre(x) exp(r(x) / alpha_das).
  double alpha_das = 1.0;
  double tempering_gamma = 0.008;
  /// Resample when ESS < resample_threshold * num_particles.
  double resample_threshold = 0.5;
  std::uint64_t seed = 0;
  /// Return the highest-weight particle instead of a weighted draw.
  bool argmax_output = false;

  void validate() const;
};

/// lambda = min(1, (1 + gamma)^steps_completed - 1).
double lambda_schedule(int steps_completed, double tempering_gamma);

/// 1 / sum w_i^2 for normalized weights.
double ess(std::span<const double> weights);

/// Systematic resampling with one offset u in [0, 1).
std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u);

/// Normalizes log-weights in place (log-sum-exp) and returns the linear weights.
std::vector<double> normalize_log_weights(std::span<double> log_w);

struct SamplerStep {
  int t = 0;
  double lambda = 0.0;
  double ess = 0.0;
  double mean_reward = 0.0;
  bool resampled = false;
};

struct SamplerTrace {
  std::vector<SamplerStep> steps;
  std::size_t chosen_particle = 0;
  /// Reward of the returned sample (on its denoised estimate at t = 0).
  double final_reward = 0.0;
  int resample_count = 0;
  double min_ess = 0.0;
};

struct SamplerResult {
  FeatureVec sample;
  SamplerTrace trace;
};

using RewardFn = std::function<double(const FeatureVec& x0_hat)>;
/// Called once per step before rewards are evaluated at that step.
using StepHook = std::function<void(int t, double lambda)>;

/// Reward-tilted SMC over the reverse diffusion of one class.
///
/// Particles start from the exact terminal marginal of the class. Each step
/// propagates every particle with `reverse_step`, evaluates the reward on the
/// denoised estimate, and moves weights from the intermediate target at lambda_old
/// to the one at lambda_new:
///   log_w += (lambda_new * r_new - lambda_old * r_old) / alpha_das.
/// lambda is forced to 1 at t = 0 so the final target is p_pre exp(r / alpha_das).
/// An empty `reward_fn` is the null reward. Deterministic given `cfg.seed`.
SamplerResult smc_generate(int class_id, const RewardFn& reward_fn, const GmmPrior& prior,
                           const NoiseSchedule& sched, const SamplerConfig& cfg,
                           const StepHook& on_step = {});

/// Plain ancestral sampling from the pretrained model (no particles, no reward).
FeatureVec ancestral_sample(int class_id, const GmmPrior& prior, const NoiseSchedule& sched,
                            std::uint64_t seed);

/// Density on a uniform grid proportional to exp(logp_pre + reward / alpha_das),
/// normalized with the trapezoid rule. Works for flattened 2-D grids when
/// `cell_measure` is given (then the rule is a plain Riemann sum over cells).
std::vector<double> grid_target_oracle(std::span<const double> grid, std::span<const double> logp_pre,
                                       std::span<const double> reward, double alpha_das,
                                       double cell_measure = 0.0);

/// JSONL lines, one per step: {"t", "lambda", "ess", "mean_reward", "resampled"}.
std::string sampler_trace_jsonl(const SamplerTrace& trace);

}  // namespace rewardloop

#endif  // REWARDLOOP_DAS_SAMPLER_HPP
