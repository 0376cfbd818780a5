#include "rewardloop/das_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "rewardloop/random.hpp"

namespace rewardloop {

void SamplerConfig::validate() const {
  if (num_particles < 2) throw ParameterError("sampler: num_particles must be >= 2");
  if (!(alpha_das > 0.0)) throw ParameterError("sampler: alpha_das must be > 0");
  if (!(tempering_gamma > 0.0)) throw ParameterError("sampler: tempering_gamma must be > 0");
  if (!(resample_threshold > 0.0) || resample_threshold > 1.0) {
    throw ParameterError("sampler: resample_threshold must be in (0, 1]");
  }
}

double lambda_schedule(int steps_completed, double tempering_gamma) {
  if (steps_completed <= 0) return 0.0;
  const double v = std::expm1(steps_completed * std::log1p(tempering_gamma));
  return std::min(1.0, v);
}

namespace {

void require_normalized(std::span<const double> w) {
  if (w.empty()) throw ParameterError("weights are empty");
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ParameterError("weights must be finite and >= 0");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("weights must sum to 1");
}

}  // namespace

double ess(std::span<const double> weights) {
  require_normalized(weights);
  double sq = 0.0;
  for (double x : weights) sq += x * x;
  return 1.0 / sq;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u) {
  require_normalized(weights);
  if (!(u >= 0.0) || !(u < 1.0)) throw ParameterError("resample offset must be in [0, 1)");
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  double cum = weights[0];
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double pos = (static_cast<double>(j) + u) / static_cast<double>(n);
    while (pos >= cum && i + 1 < n) cum += weights[++i];
    out[j] = i;
  }
  return out;
}

std::vector<double> normalize_log_weights(std::span<double> log_w) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_w) m = std::max(m, v);
  if (!std::isfinite(m)) throw ParameterError("all log-weights are -inf or non-finite");
  double s = 0.0;
  for (double v : log_w) s += std::exp(v - m);
  const double lse = m + std::log(s);
  std::vector<double> w(log_w.size());
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    log_w[i] -= lse;
    w[i] = std::exp(log_w[i]);
  }
  return w;
}

namespace {

FeatureVec standard_normal(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureVec z(d);
  for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
  return z;
}

double eval_reward(const RewardFn& fn, const FeatureVec& x0_hat, int step) {
  const double r = fn(x0_hat);
  if (!std::isfinite(r)) {
    throw SamplerError("sampler: reward is not finite at step " + std::to_string(step), step);
  }
  return r;
}

}  // namespace

SamplerResult smc_generate(int class_id, const RewardFn& reward_fn, const GmmPrior& prior,
                           const NoiseSchedule& sched, const SamplerConfig& cfg,
                           const StepHook& on_step) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.num_particles);
  const int big_t = sched.steps;
  const bool has_reward = static_cast<bool>(reward_fn);

  // One stream per particle slot plus one for resampling and the final draw, so the
  // result does not depend on evaluation order.
  std::vector<std::mt19937_64> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.push_back(make_rng(cfg.seed, {1, i}));
  std::mt19937_64 control = make_rng(cfg.seed, {2});
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<Particle> particles(n);
  for (std::size_t i = 0; i < n; ++i) {
    particles[i].x = sample_marginal(big_t, class_id, prior, sched, streams[i]);
    particles[i].log_w = -std::log(static_cast<double>(n));
    particles[i].t = big_t;
  }
  std::vector<double> reward_prev(n, 0.0);
  std::vector<double> reward_now(n, 0.0);
  std::vector<double> log_w(n, -std::log(static_cast<double>(n)));
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  double lambda_prev = 0.0;

  SamplerResult result;
  result.trace.steps.reserve(static_cast<std::size_t>(big_t));
  result.trace.min_ess = static_cast<double>(n);

  for (int k = 1; k <= big_t; ++k) {
    const int t_new = big_t - k;
    const double lambda = (t_new == 0) ? 1.0 : lambda_schedule(k, cfg.tempering_gamma);
    if (on_step) on_step(t_new, lambda);

    for (std::size_t i = 0; i < n; ++i) {
      const FeatureVec noise = standard_normal(particles[i].x.size(), streams[i]);
      particles[i].x = reverse_step(particles[i].x, t_new + 1, class_id, prior, sched, noise);
      particles[i].t = t_new;
    }

    SamplerStep step;
    step.t = t_new;
    step.lambda = lambda;
    if (has_reward && lambda > 0.0) {
      double mean_r = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const FeatureVec x0_hat = denoised_estimate(particles[i].x, t_new, class_id, prior, sched);
        reward_now[i] = eval_reward(reward_fn, x0_hat, t_new);
        log_w[i] += (lambda * reward_now[i] - lambda_prev * reward_prev[i]) / cfg.alpha_das;
        if (!std::isfinite(log_w[i])) {
          throw SamplerError("sampler: log-weight is not finite at step " + std::to_string(t_new), t_new);
        }
        mean_r += reward_now[i];
      }
      step.mean_reward = mean_r / static_cast<double>(n);
      weights = normalize_log_weights(log_w);
      reward_prev = reward_now;
      lambda_prev = lambda;
    }
    step.ess = ess(weights);
    result.trace.min_ess = std::min(result.trace.min_ess, step.ess);

    if (t_new > 0 && step.ess < cfg.resample_threshold * static_cast<double>(n)) {
      const auto idx = systematic_resample(weights, uni(control));
      std::vector<Particle> next(n);
      std::vector<double> r_next(n);
      for (std::size_t j = 0; j < n; ++j) {
        next[j] = particles[idx[j]];
        r_next[j] = reward_prev[idx[j]];
      }
      particles = std::move(next);
      reward_prev = std::move(r_next);
      std::fill(log_w.begin(), log_w.end(), -std::log(static_cast<double>(n)));
      std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
      step.resampled = true;
      ++result.trace.resample_count;
    }
    for (std::size_t i = 0; i < n; ++i) particles[i].log_w = log_w[i];
    result.trace.steps.push_back(step);
  }

  std::size_t chosen = 0;
  if (cfg.argmax_output) {
    chosen = static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
  } else {
    const double u = uni(control);
    double cum = 0.0;
    for (chosen = 0; chosen + 1 < n; ++chosen) {
      cum += weights[chosen];
      if (u < cum) break;
    }
  }
  result.sample = particles[chosen].x;
  result.trace.chosen_particle = chosen;
  result.trace.final_reward = has_reward ? reward_prev[chosen] : 0.0;
  return result;
}

FeatureVec ancestral_sample(int class_id, const GmmPrior& prior, const NoiseSchedule& sched,
                            std::uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed, {3});
  FeatureVec x = sample_marginal(sched.steps, class_id, prior, sched, rng);
  for (int t = sched.steps; t >= 1; --t) {
    x = reverse_step(x, t, class_id, prior, sched, standard_normal(x.size(), rng));
  }
  return x;
}

std::vector<double> grid_target_oracle(std::span<const double> grid, std::span<const double> logp_pre,
                                       std::span<const double> reward, double alpha_das,
                                       double cell_measure) {
  const std::size_t n = logp_pre.size();
  if (reward.size() != n) throw DimensionError("grid oracle: reward and logp sizes differ");
  if (cell_measure <= 0.0 && grid.size() != n) throw DimensionError("grid oracle: grid size differs");
  if (n < 2) throw ParameterError("grid oracle: need at least 2 grid points");
  if (!(alpha_das > 0.0)) throw ParameterError("grid oracle: alpha_das must be > 0");

  std::vector<double> log_tar(n);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    log_tar[i] = logp_pre[i] + reward[i] / alpha_das;
    if (!std::isnan(log_tar[i])) m = std::max(m, log_tar[i]);
  }
  if (!std::isfinite(m)) throw DegenerateInputError("grid oracle: target is -inf everywhere");
  std::vector<double> dens(n);
  for (std::size_t i = 0; i < n; ++i) dens[i] = std::exp(log_tar[i] - m);

  double z = 0.0;
  if (cell_measure > 0.0) {
    for (double v : dens) z += v * cell_measure;
  } else {
    for (std::size_t i = 0; i + 1 < n; ++i) z += 0.5 * (dens[i] + dens[i + 1]) * (grid[i + 1] - grid[i]);
  }
  for (double& v : dens) v /= z;
  return dens;
}

std::string sampler_trace_jsonl(const SamplerTrace& trace) {
  std::string out;
  for (const auto& s : trace.steps) {
    nlohmann::ordered_json j;
    j["t"] = s.t;
    j["lambda"] = s.lambda;
    j["ess"] = s.ess;
    j["mean_reward"] = s.mean_reward;
    j["resampled"] = s.resampled;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace rewardloop
