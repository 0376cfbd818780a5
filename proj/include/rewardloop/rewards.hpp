#ifndef REWARDLOOP_REWARDS_HPP
#define REWARDLOOP_REWARDS_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rewardloop/numerics.hpp"
#include "rewardloop/prototype.hpp"

namespace rewardloop {

// ---------------------------------------------------------------------------
// Feature-level rewards
// ---------------------------------------------------------------------------

/// Prototype-anchored MMD reward with incrementally maintained kernel sums.
///
/// Keeps the accepted generated features z_1..z_N of one class together with
///   S_D = sum_ij k(z_i, z_j)   and   S_C = sum_i k(z_i, mu_c)
/// so that adding a sample, or scoring a candidate, costs O(N d). The reward is
///   -alpha_div * S_D / N^2 + beta_cons * S_C / N
/// with the constant k(mu_c, mu_c) term dropped. An empty state scores 0.
class PammdState {
 public:
  PammdState(Prototype prototype, Bandwidth h, double alpha_div, double beta_cons);

  void push(const FeatureVec& z);

  /// Reward of the accepted set.
  double reward() const;

  /// Reward the set would have if `candidate` were pushed; the state is not modified.
  double reward_with(const FeatureVec& candidate) const;

  std::size_t size() const noexcept { return features_.size(); }
  double diversity_sum() const noexcept { return s_d_; }
  double consistency_sum() const noexcept { return s_c_; }
  const std::vector<FeatureVec>& features() const noexcept { return features_; }
  const Prototype& prototype() const noexcept { return prototype_; }
  Bandwidth bandwidth() const noexcept { return h_; }
  double alpha_div() const noexcept { return alpha_div_; }
  double beta_cons() const noexcept { return beta_cons_; }

 private:
  double cross_sum(const FeatureVec& z) const;

  Prototype prototype_;
  Bandwidth h_;
  double alpha_div_;
  double beta_cons_;
  std::vector<FeatureVec> features_;
  double s_d_ = 0.0;
  double s_c_ = 0.0;
};

PammdState pammd_init(Prototype prototype, Bandwidth h, double alpha_div, double beta_cons);
PammdState pammd_push(PammdState state, const FeatureVec& z);
double pammd_reward(const PammdState& state);

/// Dimension-wise variance matching against a reference variance vector.
///
/// Generated side is tracked through per-dimension Sum and SumSq. Variances use
/// the N - 1 denominator and are 0 for N < 2. The reward is inactive (0) until
/// N reaches the activation threshold.
class VmState {
 public:
  VmState(FeatureVec v_real, int activation_threshold);

  void push(const FeatureVec& z);
  double reward() const;
  double reward_with(const FeatureVec& candidate) const;

  /// Per-dimension variance of the generated features seen so far.
  FeatureVec generated_variance() const;

  const FeatureVec& target_variance() const noexcept { return v_real_; }
  const FeatureVec& sum() const noexcept { return sum_; }
  const FeatureVec& sum_sq() const noexcept { return sum_sq_; }
  std::size_t size() const noexcept { return n_; }
  int activation_threshold() const noexcept { return threshold_; }

 private:
  static double mismatch(const FeatureVec& sum, const FeatureVec& sum_sq, std::size_t n,
                         const FeatureVec& v_real);

  FeatureVec v_real_;
  int threshold_;
  FeatureVec sum_;
  FeatureVec sum_sq_;
  std::size_t n_ = 0;
};

/// Reference variances from >= 2 real features (throws DegenerateInputError otherwise).
VmState vm_init(const std::vector<FeatureVec>& real_features, int activation_threshold);
VmState vm_push(VmState state, const FeatureVec& z);
double vm_reward(const VmState& state);

// ---------------------------------------------------------------------------
// Logits-level rewards
// ---------------------------------------------------------------------------

struct RcConfig {
  double t_base = 2.0;
  double t_scale = 1.0;
  int num_classes = 0;

  void validate() const;
};

/// Confidence-adaptive temperature T_base + T_scale (p - 1/N_c) / (1 - 1/N_c).
double rc_temperature(double p_raw, const RcConfig& cfg);

/// Plain cross-entropy reward log softmax(logits)[target].
double ce_reward(const Eigen::VectorXd& logits, int target);

/// Recalibrated confidence reward: log softmax(logits / T)[target], with T chosen
/// from the untempered target probability. `cfg.num_classes` must equal logits.size().
double rc_reward(const Eigen::VectorXd& logits, int target, const RcConfig& cfg);

struct CscaConfig {
  double gamma = 1.0;
  int top_k = 3;
  double t_s = 1.0;
  /// Whether the target class itself belongs to the confusable set.
  bool include_target = true;

  void validate() const;
};

/// w_y = 1 / (1 + gamma * (1 - cos(feat, mu_y))) for every prototype.
Eigen::VectorXd confusion_weights(const FeatureVec& feat, std::span<const Prototype> prototypes,
                                  double gamma);

struct CscaResult {
  double value = 0.0;
  /// Logit indices that formed the confusable set, target first when included.
  std::vector<int> members;
  /// No other candidate classes were available; only the target term was used.
  bool fallback = false;
};

/// Confusion-aware reward. `prototypes[i]` must correspond to `logits[i]`.
/// `candidates` lists the logit indices eligible as confusable classes (the old
/// classes); empty means every index except the target.
CscaResult csca_reward(const FeatureVec& feat, const Eigen::VectorXd& logits, int target,
                       std::span<const Prototype> prototypes, const CscaConfig& cfg,
                       std::span<const int> candidates = {});

// ---------------------------------------------------------------------------
// Aggregation and evaluation
// ---------------------------------------------------------------------------

struct RewardComponent {
  std::string name;
  double value = 0.0;
};

double combined_reward(std::span<const RewardComponent> components,
                       std::span<const double> weights);

/// Frechet distance between two Gaussians with full covariances.
double fid_gaussian(const FeatureVec& mu_r, const Eigen::MatrixXd& cov_r, const FeatureVec& mu_g,
                    const Eigen::MatrixXd& cov_g);

/// Frechet distance for diagonal covariances given as variance vectors.
double fid_diagonal(const FeatureVec& mu_r, const FeatureVec& var_r, const FeatureVec& mu_g,
                    const FeatureVec& var_g);

/// One reward evaluation inside the sampler.
struct RewardTraceRecord {
  long sample_id = 0;
  int class_id = 0;
  std::string component;
  double value = 0.0;
  std::size_t n = 0;
  double lambda = 0.0;
  int timestep = 0;
};

}  // namespace rewardloop

#endif  // REWARDLOOP_REWARDS_HPP
