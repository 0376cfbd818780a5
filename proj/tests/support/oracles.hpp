#ifndef REWARDLOOP_TESTS_ORACLES_HPP
#define REWARDLOOP_TESTS_ORACLES_HPP

// Brute-force references and statistical helpers shared by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rewardloop/numerics.hpp"

namespace oracles {

using rewardloop::FeatureVec;

inline FeatureVec random_vec(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  FeatureVec v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = n(rng);
  return v;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// O(N^2) evaluation of the prototype-anchored MMD reward.
inline double pammd_batch(const std::vector<FeatureVec>& z, const FeatureVec& mu, double h, double alpha,
                          double beta) {
  if (z.empty()) return 0.0;
  const rewardloop::Bandwidth bw(h);
  double s_d = 0.0;
  double s_c = 0.0;
  for (const auto& a : z) {
    for (const auto& b : z) s_d += rewardloop::rbf_kernel(a, b, bw);
    s_c += rewardloop::rbf_kernel(a, mu, bw);
  }
  const double n = static_cast<double>(z.size());
  return -alpha * s_d / (n * n) + beta * s_c / n;
}

/// Variance-matching reward from the stored history (two-pass variance).
inline double vm_batch(const std::vector<FeatureVec>& z, const FeatureVec& v_real, std::size_t threshold) {
  if (z.size() < threshold) return 0.0;
  FeatureVec v = FeatureVec::Zero(v_real.size());
  if (z.size() >= 2) v = rewardloop::two_pass_variance(z);
  return -(v - v_real).squaredNorm();
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Asymptotic Kolmogorov distribution tail P(K > lambda).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(s, 0.0, 1.0);
}

/// p-value of a one-sample KS statistic for n draws.
inline double ks_pvalue(double d, double n) {
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

/// p-value of a two-sample KS statistic.
inline double ks_pvalue_two(double d, double n, double m) { return ks_pvalue(d, n * m / (n + m)); }

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Central finite difference of f along coordinate j.
inline double central_diff(const std::function<double(const FeatureVec&)>& f, const FeatureVec& x,
                           Eigen::Index j, double step) {
  FeatureVec a = x, b = x;
  a(j) += step;
  b(j) -= step;
  return (f(a) - f(b)) / (2.0 * step);
}

/// Total variation between a histogram of `xs` over [lo, hi) with `bins` cells and
/// a density sampled at the bin centres.
inline double tv_histogram(const std::vector<double>& xs, double lo, double hi, int bins,
                           const std::vector<double>& density_at_centres) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  const double w = (hi - lo) / bins;
  double inside = 0.0;
  for (double x : xs) {
    const int b = static_cast<int>(std::floor((x - lo) / w));
    if (b >= 0 && b < bins) {
      counts[static_cast<std::size_t>(b)] += 1.0;
      inside += 1.0;
    }
  }
  double mass = 0.0;
  for (double p : density_at_centres) mass += p * w;
  double tv = 0.0;
  const double n = static_cast<double>(xs.size());
  for (int b = 0; b < bins; ++b) {
    tv += std::abs(counts[static_cast<std::size_t>(b)] / n - density_at_centres[static_cast<std::size_t>(b)] * w / mass);
  }
  // Samples outside the window count fully against the match.
  return 0.5 * (tv + (n - inside) / n);
}

}  // namespace oracles

#endif  // REWARDLOOP_TESTS_ORACLES_HPP
