#ifndef REWARDLOOP_BENCHMARK_HPP
#define REWARDLOOP_BENCHMARK_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rewardloop/classifier.hpp"
#include "rewardloop/numerics.hpp"
#include "rewardloop/toy_diffusion.hpp"

namespace rewardloop {

/// Synthetic few-shot class-incremental stream.
///
/// Class ids are assigned in discovery order: base classes are 0..B-1, session s
/// (1-based) introduces B + (s-1) * way .. B + s * way - 1. True class means have
/// norm `mean_norm`; their directions realize a fixed cosine Gram matrix where
/// every pair has cosine `base_cos` except the `confusable_pairs`, which have
/// `confusable_cos`.
struct BenchmarkSpec {
  int dim = 16;
  int num_base_classes = 6;
  int num_sessions = 4;
  int way = 2;
  int shot = 5;
  int samples_per_base_class = 100;
  int eval_per_class = 40;

  double mean_norm = 5.0;
  double within_std = 1.0;
  /// Per-dimension variances are within_std^2 * exp(var_spread * N(0, 1)).
  double var_spread = 0.5;
  double base_cos = 0.5;
  double confusable_cos = 0.8;
  std::vector<std::pair<int, int>> confusable_pairs = {{8, 3}, {10, 11}};

  /// How the stand-in generator departs from the true class distributions.
  Miscalibration miscalibration;
  /// Spurious component sits at mean_c + spurious_pull * (mean_nn - mean_c), nn the most similar class.
  double spurious_pull = 0.6;

  std::uint64_t seed = 0;

  int num_classes() const { return num_base_classes + way * num_sessions; }
  /// Throws ParameterError on inconsistent fields.
  void validate() const;
};

struct SessionSplit {
  int session = 0;
  std::vector<int> classes;
  std::vector<LabeledFeature> train;
};

struct Dataset {
  BenchmarkSpec spec;
  /// sessions[0] is the base session.
  std::vector<SessionSplit> sessions;
  /// Balanced over every class; filter by seen classes before evaluating.
  std::vector<LabeledFeature> eval;
  std::vector<FeatureVec> true_means;
  std::vector<FeatureVec> true_vars;
  /// The stand-in pretrained generator, one mixture per class.
  GmmPrior prior;
  /// Cosine Gram matrix the class mean directions were built from.
  Eigen::MatrixXd mean_cosines;
};

Dataset make_benchmark(const BenchmarkSpec& spec);

/// Evaluation items whose label is in `classes`.
std::vector<LabeledFeature> eval_subset(const Dataset& data, const std::vector<int>& classes);

/// Serializes a prior as key = value lines ("class_<id> = w|var|m1,m2,...;..."),
/// the format accepted in the [prior] section of an experiment config.
std::string prior_to_config_text(const GmmPrior& prior);
/// Parses one class value of the [prior] section.
std::vector<GaussianComponent> parse_prior_components(const std::string& value);

}  // namespace rewardloop

#endif  // REWARDLOOP_BENCHMARK_HPP
