#include "rewardloop/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rewardloop {

// ----------------------------------------------------------------------------- PAMMD

PammdState::PammdState(Prototype prototype, Bandwidth h, double alpha_div, double beta_cons)
    : prototype_(std::move(prototype)), h_(h), alpha_div_(alpha_div), beta_cons_(beta_cons) {
  if (alpha_div < 0.0 || beta_cons < 0.0) {
    throw ParameterError("pammd: alpha_div and beta_cons must be nonnegative");
  }
  require_finite(prototype_.mu);
}

double PammdState::cross_sum(const FeatureVec& z) const {
  double acc = 0.0;
  for (const auto& zi : features_) acc += rbf_kernel(z, zi, h_);
  return acc;
}

void PammdState::push(const FeatureVec& z) {
  require_same_dim(z, prototype_.mu);
  require_finite(z);
  s_d_ += rbf_kernel(z, z, h_) + 2.0 * cross_sum(z);
  s_c_ += rbf_kernel(z, prototype_.mu, h_);
  features_.push_back(z);
}

double PammdState::reward() const {
  if (features_.empty()) return 0.0;
  const auto n = static_cast<double>(features_.size());
  return -alpha_div_ * s_d_ / (n * n) + beta_cons_ * s_c_ / n;
}

double PammdState::reward_with(const FeatureVec& candidate) const {
  require_same_dim(candidate, prototype_.mu);
  const double s_d = s_d_ + rbf_kernel(candidate, candidate, h_) + 2.0 * cross_sum(candidate);
  const double s_c = s_c_ + rbf_kernel(candidate, prototype_.mu, h_);
  const auto n = static_cast<double>(features_.size() + 1);
  return -alpha_div_ * s_d / (n * n) + beta_cons_ * s_c / n;
}

PammdState pammd_init(Prototype prototype, Bandwidth h, double alpha_div, double beta_cons) {
  return PammdState(std::move(prototype), h, alpha_div, beta_cons);
}

PammdState pammd_push(PammdState state, const FeatureVec& z) {
  state.push(z);
  return state;
}

double pammd_reward(const PammdState& state) { return state.reward(); }

// ----------------------------------------------------------------------------- VM

VmState::VmState(FeatureVec v_real, int activation_threshold)
    : v_real_(std::move(v_real)),
      threshold_(activation_threshold),
      sum_(FeatureVec::Zero(v_real_.size())),
      sum_sq_(FeatureVec::Zero(v_real_.size())) {
  if (activation_threshold < 1) throw ParameterError("vm: activation threshold must be >= 1");
  require_finite(v_real_);
  if ((v_real_.array() < 0.0).any()) throw ParameterError("vm: reference variances must be >= 0");
}

void VmState::push(const FeatureVec& z) {
  require_same_dim(z, sum_);
  require_finite(z);
  sum_ += z;
  sum_sq_ += z.cwiseAbs2();
  ++n_;
}

double VmState::mismatch(const FeatureVec& sum, const FeatureVec& sum_sq, std::size_t n,
                         const FeatureVec& v_real) {
  if (n < 2) return -v_real.squaredNorm();
  const auto nn = static_cast<double>(n);
  // Clamp at zero: cancellation can push SumSq - Sum^2/N a hair below 0.
  const FeatureVec v_gen = ((sum_sq.array() - sum.array().square() / nn) / (nn - 1.0)).max(0.0);
  return -(v_gen - v_real).squaredNorm();
}

FeatureVec VmState::generated_variance() const {
  if (n_ < 2) return FeatureVec::Zero(sum_.size());
  const auto nn = static_cast<double>(n_);
  return ((sum_sq_.array() - sum_.array().square() / nn) / (nn - 1.0)).max(0.0);
}

double VmState::reward() const {
  if (n_ < static_cast<std::size_t>(threshold_)) return 0.0;
  return mismatch(sum_, sum_sq_, n_, v_real_);
}

double VmState::reward_with(const FeatureVec& candidate) const {
  require_same_dim(candidate, sum_);
  const std::size_t n = n_ + 1;
  if (n < static_cast<std::size_t>(threshold_)) return 0.0;
  return mismatch(sum_ + candidate, sum_sq_ + candidate.cwiseAbs2(), n, v_real_);
}

VmState vm_init(const std::vector<FeatureVec>& real_features, int activation_threshold) {
  if (real_features.size() < 2) {
    throw DegenerateInputError("vm: at least 2 reference features are required");
  }
  return VmState(two_pass_variance(real_features), activation_threshold);
}

VmState vm_push(VmState state, const FeatureVec& z) {
  state.push(z);
  return state;
}

double vm_reward(const VmState& state) { return state.reward(); }

// ----------------------------------------------------------------------------- RC

void RcConfig::validate() const {
  if (!(t_base > 1.0)) throw ParameterError("rc: t_base must be > 1");
  if (!(t_scale > 0.0)) throw ParameterError("rc: t_scale must be > 0");
}

double rc_temperature(double p_raw, const RcConfig& cfg) {
  if (cfg.num_classes < 2) throw ParameterError("rc: need at least 2 classes");
  const double inv = 1.0 / cfg.num_classes;
  const double t = cfg.t_base + cfg.t_scale * (p_raw - inv) / (1.0 - inv);
  if (!(t > 0.0)) throw ParameterError("rc: temperature is not positive");
  return t;
}

double ce_reward(const Eigen::VectorXd& logits, int target) {
  if (target < 0 || target >= logits.size()) throw ParameterError("target index out of range");
  return log_softmax(logits)(target);
}

double rc_reward(const Eigen::VectorXd& logits, int target, const RcConfig& cfg) {
  if (target < 0 || target >= logits.size()) throw ParameterError("target index out of range");
  RcConfig resolved = cfg;
  if (resolved.num_classes == 0) resolved.num_classes = static_cast<int>(logits.size());
  if (resolved.num_classes != logits.size()) {
    throw DimensionError("rc: logits length differs from the configured class count");
  }
  const double p_raw = std::exp(log_softmax(logits)(target));
  const double t = rc_temperature(p_raw, resolved);
  return log_softmax(Eigen::VectorXd(logits / t))(target);
}

// ----------------------------------------------------------------------------- CSCA

void CscaConfig::validate() const {
  if (!(gamma > 0.0)) throw ParameterError("csca: gamma must be > 0");
  if (top_k < 1) throw ParameterError("csca: top_k must be >= 1");
  if (!(t_s > 0.0)) throw ParameterError("csca: t_s must be > 0");
}

Eigen::VectorXd confusion_weights(const FeatureVec& feat, std::span<const Prototype> prototypes,
                                  double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("confusion weights: gamma must be > 0");
  if (!(feat.norm() > 0.0)) throw DegenerateInputError("confusion weights: zero-norm feature");
  Eigen::VectorXd w(static_cast<Eigen::Index>(prototypes.size()));
  for (std::size_t i = 0; i < prototypes.size(); ++i) {
    const double d_cos = 1.0 - cosine_sim(feat, prototypes[i].mu);
    w(static_cast<Eigen::Index>(i)) = 1.0 / (1.0 + gamma * d_cos);
  }
  return w;
}

CscaResult csca_reward(const FeatureVec& feat, const Eigen::VectorXd& logits, int target,
                       std::span<const Prototype> prototypes, const CscaConfig& cfg,
                       std::span<const int> candidates) {
  cfg.validate();
  if (static_cast<Eigen::Index>(prototypes.size()) != logits.size()) {
    throw DimensionError("csca: prototypes must cover every logit");
  }
  if (target < 0 || target >= logits.size()) throw ParameterError("target index out of range");

  const Eigen::VectorXd w = confusion_weights(feat, prototypes, cfg.gamma);
  const Eigen::VectorXd log_p = log_softmax(Eigen::VectorXd(logits / cfg.t_s));

  std::vector<int> pool;
  if (candidates.empty()) {
    for (int i = 0; i < logits.size(); ++i) {
      if (i != target) pool.push_back(i);
    }
  } else {
    for (int i : candidates) {
      if (i < 0 || i >= logits.size()) throw ParameterError("csca: candidate index out of range");
      if (i != target) pool.push_back(i);
    }
  }
  // Highest weight == smallest cosine distance; ties go to the lower index.
  std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) { return w(a) > w(b); });
  const auto k = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg.top_k));

  CscaResult out;
  if (k == 0) {
    out.fallback = true;
    out.members = {target};
    out.value = w(target) * log_p(target);
    return out;
  }
  if (cfg.include_target) out.members.push_back(target);
  out.members.insert(out.members.end(), pool.begin(), pool.begin() + static_cast<long>(k));
  for (int y : out.members) out.value += w(y) * log_p(y);
  return out;
}

// ----------------------------------------------------------------------------- misc

double combined_reward(std::span<const RewardComponent> components,
                       std::span<const double> weights) {
  if (components.size() != weights.size()) {
    throw DimensionError("combined reward: components and weights differ in length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (weights[i] < 0.0) throw ParameterError("combined reward: negative weight");
    if (weights[i] != 0.0) acc += weights[i] * components[i].value;
  }
  return acc;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) throw ParameterError(std::string("fid: ") + name + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ParameterError(std::string("fid: ") + name + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw ParameterError(std::string("fid: ") + name + " is not positive semi-definite");
  }
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid_gaussian(const FeatureVec& mu_r, const Eigen::MatrixXd& cov_r, const FeatureVec& mu_g,
                    const Eigen::MatrixXd& cov_g) {
  require_same_dim(mu_r, mu_g);
  if (cov_r.rows() != mu_r.size() || cov_g.rows() != mu_g.size()) {
    throw DimensionError("fid: covariance size differs from mean size");
  }
  const Eigen::MatrixXd root_r = psd_sqrt(cov_r, "cov_r");
  psd_sqrt(cov_g, "cov_g");
  // Tr((S_r S_g)^{1/2}) = Tr((S_r^{1/2} S_g S_r^{1/2})^{1/2}); the inner matrix is PSD.
  const Eigen::MatrixXd inner = root_r * cov_g * root_r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()));
  const double tr_cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_r - mu_g).squaredNorm() + cov_r.trace() + cov_g.trace() - 2.0 * tr_cross;
  return std::max(0.0, value);
}

double fid_diagonal(const FeatureVec& mu_r, const FeatureVec& var_r, const FeatureVec& mu_g,
                    const FeatureVec& var_g) {
  require_same_dim(mu_r, mu_g);
  require_same_dim(var_r, mu_r);
  require_same_dim(var_g, mu_g);
  if ((var_r.array() < 0.0).any() || (var_g.array() < 0.0).any()) {
    throw ParameterError("fid: variances must be nonnegative");
  }
  // var_r + var_g - 2 sqrt(var_r var_g) == (sqrt(var_r) - sqrt(var_g))^2, which stays >= 0.
  const double trace_term = (var_r.array().sqrt() - var_g.array().sqrt()).square().sum();
  return (mu_r - mu_g).squaredNorm() + trace_term;
}

}  // namespace rewardloop
