#ifndef REWARDLOOP_TOY_DIFFUSION_HPP
#define REWARDLOOP_TOY_DIFFUSION_HPP

#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rewardloop/numerics.hpp"

namespace rewardloop {

/// Isotropic Gaussian mixture component.
struct GaussianComponent {
  double weight = 1.0;
  FeatureVec mean;
  double var = 1.0;
};

/// Per-class Gaussian mixture standing in for a pretrained class-conditional generator.
class GmmPrior {
 public:
  GmmPrior() = default;

  /// Adds or replaces a class. Weights must be positive and sum to 1 (to 1e-12).
  void set_class(int class_id, std::vector<GaussianComponent> components);

  const std::vector<GaussianComponent>& components(int class_id) const;
  bool has_class(int class_id) const { return classes_.count(class_id) != 0; }
  std::vector<int> class_ids() const;
  Eigen::Index dim() const noexcept { return dim_; }

  /// Mixture mean and per-dimension variance of one class at t = 0.
  FeatureVec class_mean(int class_id) const;
  FeatureVec class_variance(int class_id) const;

 private:
  std::map<int, std::vector<GaussianComponent>> classes_;
  Eigen::Index dim_ = 0;
};

/// Knobs that make the stand-in generator disagree with the true data distribution.
struct Miscalibration {
  /// Mean shift as a fraction of the class radius sqrt(sum_j var_j).
  double shift_fraction = 0.5;
  /// Isotropic variance = inflation * mean_j var_j.
  double var_inflation = 2.0;
  /// Weight of the spurious component; 0 disables it.
  double spurious_weight = 0.15;
};

/// Builds a miscalibrated mixture for one class: a main component around
/// `true_mean + shift` and, optionally, a spurious component at `spurious_mean`.
/// `shift_direction` need not be normalized.
std::vector<GaussianComponent> miscalibrated_components(const FeatureVec& true_mean,
                                                        const FeatureVec& true_var,
                                                        const FeatureVec& shift_direction,
                                                        const FeatureVec& spurious_mean,
                                                        const Miscalibration& knobs);

/// Variance-preserving discretization: alpha_bar[t] = prod_{s<=t} (1 - beta_s).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> betas;      // betas[s - 1] = beta_s, s = 1..T
  std::vector<double> alpha_bar;  // alpha_bar[0] = 1

  double beta(int t) const { return betas.at(static_cast<std::size_t>(t - 1)); }
};

NoiseSchedule make_schedule(int steps, double beta_min, double beta_max);

struct LogpScore {
  double logp = 0.0;
  FeatureVec score;
};

/// Exact log-density and score of the class marginal at step t.
LogpScore marginal_logpdf_score(const FeatureVec& x_t, int t, int class_id, const GmmPrior& prior,
                                const NoiseSchedule& sched);

/// Posterior mean E[x_0 | x_t] through the score (Tweedie).
FeatureVec denoised_estimate(const FeatureVec& x_t, int t, int class_id, const GmmPrior& prior,
                             const NoiseSchedule& sched);

struct PosteriorMoments {
  FeatureVec mean;
  Eigen::MatrixXd cov;
};

/// Mean and covariance of x_0 given x_t under the class mixture.
PosteriorMoments posterior_moments(const FeatureVec& x_t, int t, int class_id,
                                   const GmmPrior& prior, const NoiseSchedule& sched);

/// One ancestral step t -> t-1. The mean is the DDPM posterior mean with the
/// denoised estimate plugged in; the injected covariance is the posterior
/// variance of the discretization plus the propagated uncertainty about x_0,
/// which makes the kernel exact for a single Gaussian. `noise` ~ N(0, I).
FeatureVec reverse_step(const FeatureVec& x_t, int t, int class_id, const GmmPrior& prior,
                        const NoiseSchedule& sched, const FeatureVec& noise);

/// Draw from the exact class marginal at step t.
FeatureVec sample_marginal(int t, int class_id, const GmmPrior& prior, const NoiseSchedule& sched,
                           std::mt19937_64& rng);

}  // namespace rewardloop

#endif  // REWARDLOOP_TOY_DIFFUSION_HPP
