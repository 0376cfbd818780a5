#ifndef REWARDLOOP_NUMERICS_HPP
#define REWARDLOOP_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rewardloop/errors.hpp"

namespace rewardloop {

template <typename Scalar>
using FeatureVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Feature vectors, prototypes, latents and generated samples all share this type.
using FeatureVec = FeatureVector<double>;

/// Positive kernel length scale.
template <typename Scalar>
class BasicBandwidth {
 public:
  explicit BasicBandwidth(Scalar h) : h_(h) {
    if (!(h > Scalar(0)) || !std::isfinite(static_cast<double>(h))) {
      throw ParameterError("bandwidth must be positive and finite");
    }
  }
  Scalar value() const noexcept { return h_; }

 private:
  Scalar h_;
};

using Bandwidth = BasicBandwidth<double>;

template <typename A, typename B>
void require_same_dim(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

template <typename A>
void require_finite(const Eigen::MatrixBase<A>& a) {
  if (!a.allFinite()) throw ParameterError("feature vector has non-finite entries");
}

template <typename A, typename B>
typename A::Scalar squared_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  require_same_dim(x, y);
  return (x - y).squaredNorm();
}

/// exp(-|x - y|^2 / (2 h^2)).
template <typename A, typename B>
typename A::Scalar rbf_kernel(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y,
                              BasicBandwidth<typename A::Scalar> h) {
  using Scalar = typename A::Scalar;
  const Scalar hv = h.value();
  return std::exp(-squared_distance(x, y) / (Scalar(2) * hv * hv));
}

template <typename A, typename B>
typename A::Scalar cosine_sim(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Scalar = typename A::Scalar;
  require_same_dim(a, b);
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) {
    throw DegenerateInputError("cosine similarity of a zero-norm vector");
  }
  // Clamp rounding excursions so downstream 1 - cos stays in [0, 2].
  return std::clamp(a.dot(b) / (na * nb), Scalar(-1), Scalar(1));
}

/// Median of the pairwise Euclidean distances (median heuristic).
template <typename Scalar>
BasicBandwidth<Scalar> median_bandwidth(std::span<const FeatureVector<Scalar>> points) {
  if (points.size() < 2) throw DegenerateInputError("median bandwidth needs at least 2 points");
  std::vector<Scalar> dists;
  dists.reserve(points.size() * (points.size() - 1) / 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      dists.push_back(std::sqrt(squared_distance(points[i], points[j])));
    }
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const Scalar med = (m % 2 == 1) ? dists[m / 2] : (dists[m / 2 - 1] + dists[m / 2]) / Scalar(2);
  if (!(med > Scalar(0))) {
    throw DegenerateInputError("median pairwise distance is zero; supply an explicit bandwidth");
  }
  return BasicBandwidth<Scalar>(med);
}

inline Bandwidth median_bandwidth(const std::vector<FeatureVec>& points) {
  return median_bandwidth<double>(std::span<const FeatureVec>(points));
}

/// Isotropic Gaussian log-density.
template <typename A, typename B>
typename A::Scalar gaussian_logpdf(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& mean,
                                   typename A::Scalar var) {
  using Scalar = typename A::Scalar;
  if (!(var > Scalar(0))) throw ParameterError("gaussian variance must be positive");
  const auto d = static_cast<Scalar>(x.size());
  return -Scalar(0.5) * d * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * var) -
         squared_distance(x, mean) / (Scalar(2) * var);
}

template <typename A>
typename A::Scalar log_sum_exp(const Eigen::MatrixBase<A>& v) {
  using Scalar = typename A::Scalar;
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(static_cast<double>(m))) return m;
  return m + std::log((v.array() - m).exp().sum());
}

template <typename A>
FeatureVector<typename A::Scalar> log_softmax(const Eigen::MatrixBase<A>& v) {
  return (v.array() - log_sum_exp(v)).matrix();
}

template <typename A>
FeatureVector<typename A::Scalar> softmax(const Eigen::MatrixBase<A>& v) {
  return log_softmax(v).array().exp().matrix();
}

/// Per-dimension sample variance (N - 1 denominator), two-pass. Zero for fewer than 2 points.
template <typename Scalar>
FeatureVector<Scalar> two_pass_variance(std::span<const FeatureVector<Scalar>> points) {
  if (points.empty()) throw DegenerateInputError("variance of an empty set");
  const Eigen::Index d = points.front().size();
  FeatureVector<Scalar> mean = FeatureVector<Scalar>::Zero(d);
  for (const auto& p : points) {
    require_same_dim(p, mean);
    mean += p;
  }
  mean /= static_cast<Scalar>(points.size());
  FeatureVector<Scalar> acc = FeatureVector<Scalar>::Zero(d);
  if (points.size() < 2) return acc;
  for (const auto& p : points) acc += (p - mean).cwiseAbs2();
  return acc / static_cast<Scalar>(points.size() - 1);
}

inline FeatureVec two_pass_variance(const std::vector<FeatureVec>& points) {
  return two_pass_variance<double>(std::span<const FeatureVec>(points));
}

template <typename Scalar>
FeatureVector<Scalar> mean_of(std::span<const FeatureVector<Scalar>> points) {
  if (points.empty()) throw DegenerateInputError("mean of an empty set");
  FeatureVector<Scalar> mean = FeatureVector<Scalar>::Zero(points.front().size());
  for (const auto& p : points) {
    require_same_dim(p, mean);
    mean += p;
  }
  return mean / static_cast<Scalar>(points.size());
}

inline FeatureVec mean_of(const std::vector<FeatureVec>& points) {
  return mean_of<double>(std::span<const FeatureVec>(points));
}

/// Gram matrix of the RBF kernel over a point set.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> rbf_gram(
    std::span<const FeatureVector<Scalar>> points, BasicBandwidth<Scalar> h) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = Scalar(1);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      g(i, j) = g(j, i) = rbf_kernel(points[i], points[j], h);
    }
  }
  return g;
}

}  // namespace rewardloop

#endif  // REWARDLOOP_NUMERICS_HPP
