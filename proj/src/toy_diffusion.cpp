#include "rewardloop/toy_diffusion.hpp"

#include <cmath>
#include <string>

namespace rewardloop {

void GmmPrior::set_class(int class_id, std::vector<GaussianComponent> components) {
  if (components.empty()) throw ParameterError("gmm: class needs at least one component");
  double total = 0.0;
  const Eigen::Index d = components.front().mean.size();
  if (d == 0) throw ParameterError("gmm: zero-dimensional component");
  if (dim_ != 0 && d != dim_) throw DimensionError("gmm: class dimension differs from prior");
  for (const auto& c : components) {
    if (c.mean.size() != d) throw DimensionError("gmm: component dimensions differ");
    if (!(c.weight > 0.0) || c.weight > 1.0) throw ParameterError("gmm: weight outside (0, 1]");
    if (!(c.var > 0.0)) throw ParameterError("gmm: variance must be positive");
    require_finite(c.mean);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("gmm: weights must sum to 1");
  dim_ = d;
  classes_[class_id] = std::move(components);
}

const std::vector<GaussianComponent>& GmmPrior::components(int class_id) const {
  auto it = classes_.find(class_id);
  if (it == classes_.end()) throw ParameterError("gmm: unknown class " + std::to_string(class_id));
  return it->second;
}

std::vector<int> GmmPrior::class_ids() const {
  std::vector<int> ids;
  for (const auto& [id, _] : classes_) ids.push_back(id);
  return ids;
}

FeatureVec GmmPrior::class_mean(int class_id) const {
  FeatureVec m = FeatureVec::Zero(dim_);
  for (const auto& c : components(class_id)) m += c.weight * c.mean;
  return m;
}

FeatureVec GmmPrior::class_variance(int class_id) const {
  const FeatureVec m = class_mean(class_id);
  FeatureVec v = FeatureVec::Zero(dim_);
  for (const auto& c : components(class_id)) {
    v += c.weight * ((c.mean - m).cwiseAbs2() + FeatureVec::Constant(dim_, c.var));
  }
  return v;
}

std::vector<GaussianComponent> miscalibrated_components(const FeatureVec& true_mean,
                                                        const FeatureVec& true_var,
                                                        const FeatureVec& shift_direction,
                                                        const FeatureVec& spurious_mean,
                                                        const Miscalibration& knobs) {
  require_same_dim(true_mean, true_var);
  require_same_dim(true_mean, shift_direction);
  if (knobs.spurious_weight < 0.0 || knobs.spurious_weight >= 1.0) {
    throw ParameterError("miscalibration: spurious weight must be in [0, 1)");
  }
  if (!(knobs.var_inflation > 0.0)) throw ParameterError("miscalibration: inflation must be > 0");
  const double radius = std::sqrt(true_var.sum());
  const double dir_norm = shift_direction.norm();
  FeatureVec shift = FeatureVec::Zero(true_mean.size());
  if (dir_norm > 0.0) shift = shift_direction / dir_norm * (knobs.shift_fraction * radius);
  const double var = knobs.var_inflation * true_var.mean();

  std::vector<GaussianComponent> out;
  out.push_back({1.0 - knobs.spurious_weight, true_mean + shift, var});
  if (knobs.spurious_weight > 0.0) {
    require_same_dim(true_mean, spurious_mean);
    out.push_back({knobs.spurious_weight, spurious_mean, var});
  }
  return out;
}

NoiseSchedule make_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 2) throw ParameterError("schedule: need at least 2 steps");
  if (!(beta_min > 0.0) || beta_min > beta_max || !(beta_max < 1.0)) {
    throw ParameterError("schedule: need 0 < beta_min <= beta_max < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(static_cast<std::size_t>(steps));
  s.alpha_bar.resize(static_cast<std::size_t>(steps) + 1);
  s.alpha_bar[0] = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double b = beta_min + (beta_max - beta_min) * i / (steps - 1);
    s.betas[static_cast<std::size_t>(i)] = b;
    s.alpha_bar[static_cast<std::size_t>(i) + 1] = s.alpha_bar[static_cast<std::size_t>(i)] * (1.0 - b);
  }
  return s;
}

namespace {

void check_step(int t, const NoiseSchedule& sched) {
  if (t < 0 || t > sched.steps) throw ParameterError("diffusion: step outside [0, T]");
}

struct NoisyComponent {
  double log_weight;
  FeatureVec mean;
  double var;
};

std::vector<NoisyComponent> noisy_components(int t, int class_id, const GmmPrior& prior,
                                             const NoiseSchedule& sched) {
  check_step(t, sched);
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  const double sq = std::sqrt(ab);
  const auto& raw = prior.components(class_id);
  std::vector<NoisyComponent> out;
  out.reserve(raw.size());
  for (const auto& c : raw) {
    out.push_back({std::log(c.weight), sq * c.mean, ab * c.var + (1.0 - ab)});
  }
  return out;
}

/// log w_k + log N(x; m_k, v_k) per component.
Eigen::VectorXd log_terms(const FeatureVec& x, const std::vector<NoisyComponent>& comps) {
  Eigen::VectorXd lt(static_cast<Eigen::Index>(comps.size()));
  for (std::size_t k = 0; k < comps.size(); ++k) {
    lt(static_cast<Eigen::Index>(k)) = comps[k].log_weight + gaussian_logpdf(x, comps[k].mean, comps[k].var);
  }
  return lt;
}

}  // namespace

LogpScore marginal_logpdf_score(const FeatureVec& x_t, int t, int class_id, const GmmPrior& prior,
                                const NoiseSchedule& sched) {
  const auto comps = noisy_components(t, class_id, prior, sched);
  require_same_dim(x_t, comps.front().mean);
  const Eigen::VectorXd lt = log_terms(x_t, comps);
  LogpScore out;
  out.logp = log_sum_exp(lt);
  const Eigen::VectorXd resp = (lt.array() - out.logp).exp();
  out.score = FeatureVec::Zero(x_t.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    out.score -= resp(static_cast<Eigen::Index>(k)) * (x_t - comps[k].mean) / comps[k].var;
  }
  return out;
}

FeatureVec denoised_estimate(const FeatureVec& x_t, int t, int class_id, const GmmPrior& prior,
                             const NoiseSchedule& sched) {
  check_step(t, sched);
  if (t == 0) return x_t;
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  const FeatureVec score = marginal_logpdf_score(x_t, t, class_id, prior, sched).score;
  return (x_t + (1.0 - ab) * score) / std::sqrt(ab);
}

namespace {

struct MixturePosterior {
  FeatureVec mean;
  /// Within-component posterior variance averaged over responsibilities.
  double iso = 0.0;
  std::vector<FeatureVec> means;
  Eigen::VectorXd resp;
};

// Per component the posterior of x_0 is Gaussian with
//   mean mu + sqrt(ab) var / v (x_t - sqrt(ab) mu),  variance var (1 - ab) / v.
MixturePosterior mixture_posterior(const FeatureVec& x_t, int t, int class_id, const GmmPrior& prior,
                                   const NoiseSchedule& sched) {
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  const double sq = std::sqrt(ab);
  const auto& raw = prior.components(class_id);
  const auto comps = noisy_components(t, class_id, prior, sched);
  require_same_dim(x_t, comps.front().mean);
  MixturePosterior out;
  if (raw.size() == 1) {
    const double v = comps[0].var;
    out.mean = raw[0].mean + (sq * raw[0].var / v) * (x_t - comps[0].mean);
    out.iso = raw[0].var * (1.0 - ab) / v;
    out.resp = Eigen::VectorXd::Ones(1);
    return out;
  }
  const Eigen::VectorXd lt = log_terms(x_t, comps);
  out.resp = (lt.array() - log_sum_exp(lt)).exp();
  out.means.reserve(raw.size());
  out.mean = FeatureVec::Zero(x_t.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double v = comps[k].var;
    out.means.push_back(raw[k].mean + (sq * raw[k].var / v) * (x_t - comps[k].mean));
    const double r = out.resp(static_cast<Eigen::Index>(k));
    out.mean += r * out.means.back();
    out.iso += r * raw[k].var * (1.0 - ab) / v;
  }
  return out;
}

Eigen::MatrixXd mixture_covariance(const MixturePosterior& mp) {
  const Eigen::Index d = mp.mean.size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  cov.diagonal().setConstant(mp.iso);
  for (std::size_t k = 0; k < mp.means.size(); ++k) {
    const double r = mp.resp(static_cast<Eigen::Index>(k));
    if (r < 1e-300) continue;
    const FeatureVec dev = mp.means[k] - mp.mean;
    cov.noalias() += r * dev * dev.transpose();
  }
  return cov;
}

}  // namespace

PosteriorMoments posterior_moments(const FeatureVec& x_t, int t, int class_id,
                                   const GmmPrior& prior, const NoiseSchedule& sched) {
  check_step(t, sched);
  const Eigen::Index d = x_t.size();
  if (t == 0) return PosteriorMoments{x_t, Eigen::MatrixXd::Zero(d, d)};
  MixturePosterior mp = mixture_posterior(x_t, t, class_id, prior, sched);
  Eigen::MatrixXd cov = mixture_covariance(mp);
  return PosteriorMoments{std::move(mp.mean), std::move(cov)};
}

FeatureVec reverse_step(const FeatureVec& x_t, int t, int class_id, const GmmPrior& prior,
                        const NoiseSchedule& sched, const FeatureVec& noise) {
  if (t < 1 || t > sched.steps) throw ParameterError("reverse step: t must be in [1, T]");
  require_same_dim(x_t, noise);
  const auto ti = static_cast<std::size_t>(t);
  const double ab_t = sched.alpha_bar[ti];
  const double ab_prev = sched.alpha_bar[ti - 1];
  const double beta = sched.beta(t);
  const double c_x0 = std::sqrt(ab_prev) * beta / (1.0 - ab_t);
  const double c_xt = std::sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab_t);
  const double tilde_beta = (1.0 - ab_prev) / (1.0 - ab_t) * beta;

  const MixturePosterior mp = mixture_posterior(x_t, t, class_id, prior, sched);
  const FeatureVec mean = c_x0 * mp.mean + c_xt * x_t;
  if (mp.means.empty()) return mean + std::sqrt(c_x0 * c_x0 * mp.iso + tilde_beta) * noise;

  Eigen::MatrixXd cov = (c_x0 * c_x0) * mixture_covariance(mp);
  cov.diagonal().array() += tilde_beta;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return mean + es.eigenvectors() * (root.asDiagonal() * (es.eigenvectors().transpose() * noise));
  }
  return mean + llt.matrixL() * noise;
}

FeatureVec sample_marginal(int t, int class_id, const GmmPrior& prior, const NoiseSchedule& sched,
                           std::mt19937_64& rng) {
  const auto comps = noisy_components(t, class_id, prior, sched);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  std::size_t k = 0;
  double cum = 0.0;
  for (; k + 1 < comps.size(); ++k) {
    cum += std::exp(comps[k].log_weight);
    if (u < cum) break;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureVec x(comps[k].mean.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = normal(rng);
  return comps[k].mean + std::sqrt(comps[k].var) * x;
}

}  // namespace rewardloop
