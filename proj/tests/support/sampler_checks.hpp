#ifndef REWARDLOOP_TESTS_SAMPLER_CHECKS_HPP
#define REWARDLOOP_TESTS_SAMPLER_CHECKS_HPP

// 1-D sampler experiments shared by the sampler tests and the acceptance runner.

#include <cmath>
#include <vector>

#include "rewardloop/das_sampler.hpp"
#include "rewardloop/random.hpp"
#include "rewardloop/toy_diffusion.hpp"
#include "support/oracles.hpp"

namespace sampler_checks {

using namespace rewardloop;

inline constexpr double kNullMean = 1.5;
inline constexpr double kNullVar = 0.8;

inline GmmPrior single_gaussian_prior() {
  GmmPrior p;
  FeatureVec m(1);
  m << kNullMean;
  p.set_class(0, {{1.0, m, kNullVar}});
  return p;
}

inline GmmPrior two_mode_prior() {
  GmmPrior p;
  FeatureVec a(1), b(1);
  a << -1.5;
  b << 2.0;
  p.set_class(0, {{0.4, a, 0.5}, {0.6, b, 0.7}});
  return p;
}

inline NoiseSchedule default_schedule() { return make_schedule(50, 1e-4, 0.2); }

inline std::vector<double> draw(const GmmPrior& prior, const NoiseSchedule& sched, const RewardFn& r,
                                SamplerConfig cfg, int n, std::uint64_t seed) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cfg.seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
    xs.push_back(smc_generate(0, r, prior, sched, cfg).sample(0));
  }
  return xs;
}

struct NullStats {
  double mean_z = 0.0;   // |sample mean - mean| / (sigma / sqrt(n))
  double ks_p = 0.0;
};

inline NullStats null_stats(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  const double sd = std::sqrt(kNullVar);
  NullStats s;
  s.mean_z = std::abs(m - kNullMean) / (sd / std::sqrt(n));
  const double d = oracles::ks_statistic(xs, [&](double x) { return oracles::normal_cdf((x - kNullMean) / sd); });
  s.ks_p = oracles::ks_pvalue(d, n);
  return s;
}

/// Null-fidelity over several seeds. `huge_alpha` swaps the zero reward for a
/// bounded non-constant reward at alpha_das = 1e9.
inline std::vector<NullStats> null_fidelity(bool huge_alpha, int seeds, int n) {
  const GmmPrior prior = single_gaussian_prior();
  const NoiseSchedule sched = default_schedule();
  SamplerConfig cfg;
  RewardFn r;
  if (huge_alpha) {
    cfg.alpha_das = 1e9;
    r = [](const FeatureVec& x) { return std::cos(3.0 * x(0)) - x(0) * x(0) / (1.0 + x(0) * x(0)); };
  }
  std::vector<NullStats> out;
  for (int s = 0; s < seeds; ++s) out.push_back(null_stats(draw(prior, sched, r, cfg, n, 1000 + s)));
  return out;
}

inline constexpr double kRewardCentre = 0.5;
inline constexpr double kWindowLo = -6.0;
inline constexpr double kWindowHi = 6.0;
inline constexpr int kBins = 64;

inline double quadratic_reward(const FeatureVec& x) {
  const double d = x(0) - kRewardCentre;
  return -d * d;
}

/// Oracle density at the histogram bin centres.
inline std::vector<double> oracle_at_bin_centres(const GmmPrior& prior, double alpha_das) {
  std::vector<double> grid, logp, reward;
  const double w = (kWindowHi - kWindowLo) / kBins;
  FeatureVec x(1);
  for (int b = 0; b < kBins; ++b) {
    x(0) = kWindowLo + (b + 0.5) * w;
    grid.push_back(x(0));
    logp.push_back(marginal_logpdf_score(x, 0, 0, prior, make_schedule(2, 0.1, 0.2)).logp);
    reward.push_back(quadratic_reward(x));
  }
  return grid_target_oracle(grid, logp, reward, alpha_das);
}

/// TV distance between n sampler draws and the oracle for one particle count.
inline double oracle_tv(int num_particles, int n, std::uint64_t seed) {
  const GmmPrior prior = two_mode_prior();
  SamplerConfig cfg;
  cfg.num_particles = num_particles;
  cfg.alpha_das = 1.0;
  const std::vector<double> xs = draw(prior, default_schedule(), quadratic_reward, cfg, n, seed);
  return oracles::tv_histogram(xs, kWindowLo, kWindowHi, kBins, oracle_at_bin_centres(prior, 1.0));
}

}  // namespace sampler_checks

#endif  // REWARDLOOP_TESTS_SAMPLER_CHECKS_HPP
