#ifndef REWARDLOOP_CLASSIFIER_HPP
#define REWARDLOOP_CLASSIFIER_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rewardloop/numerics.hpp"
#include "rewardloop/prototype.hpp"

namespace rewardloop {

enum class EncoderMode { kIdentity, kAffine };

/// f(x) = x, or f(x) = A x + b.
struct Encoder {
  EncoderMode mode = EncoderMode::kIdentity;
  Eigen::MatrixXd a;
  FeatureVec b;

  static Encoder identity() { return {}; }
  static Encoder affine(Eigen::MatrixXd a, FeatureVec b);
};

struct LabeledFeature {
  FeatureVec x;
  int class_id = 0;
};

/// Cosine-logit prototype classifier: logit_c = s * cos(f(x), mu_c).
class ClassifierState {
 public:
  explicit ClassifierState(Eigen::Index dim, double logit_scale = 16.0, Encoder encoder = {});

  Eigen::Index dim() const noexcept { return dim_; }
  double logit_scale() const noexcept { return scale_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  Encoder& mutable_encoder() noexcept { return encoder_; }
  bool encoder_frozen() const noexcept { return frozen_; }
  void set_encoder_frozen(bool frozen) noexcept { frozen_ = frozen; }

  /// Prototypes in class discovery order.
  const std::vector<Prototype>& prototypes() const noexcept { return prototypes_; }
  std::size_t num_classes() const noexcept { return prototypes_.size(); }
  bool has_class(int class_id) const { return index_.count(class_id) != 0; }
  /// Position of a class in the logit vector.
  int index_of(int class_id) const;
  const Prototype& prototype(int class_id) const;

  /// Appends a new class or replaces an existing prototype in place.
  void set_prototype(int class_id, FeatureVec mu);

  FeatureVec encode(const FeatureVec& x) const;

 private:
  Eigen::Index dim_;
  double scale_;
  Encoder encoder_;
  bool frozen_ = false;
  std::vector<Prototype> prototypes_;
  std::map<int, int> index_;
};

FeatureVec encode(const ClassifierState& state, const FeatureVec& x);

/// Sets mu_c to the mean encoded shot of each listed class; other prototypes are untouched.
ClassifierState init_prototypes(ClassifierState state,
                                const std::map<int, std::vector<FeatureVec>>& shots);

/// Cosine logits of an already-encoded feature, in class discovery order.
Eigen::VectorXd logits_of_feature(const ClassifierState& state, const FeatureVec& feature);

/// Cosine logits of a raw input (encoded first).
Eigen::VectorXd logits(const ClassifierState& state, const FeatureVec& x);

/// Nearest class mean by cosine similarity; ties go to the lowest class id.
int ncm_predict(const ClassifierState& state, const FeatureVec& x);

/// Mean cross-entropy of softmax(logits) over `data`.
double cross_entropy_loss(const ClassifierState& state, std::span<const LabeledFeature> data);

struct LossGradient {
  double loss = 0.0;
  /// One row per prototype, in discovery order.
  Eigen::MatrixXd prototypes;
  Eigen::MatrixXd encoder_a;
  FeatureVec encoder_b;
};

/// Analytic gradient of `cross_entropy_loss`. Encoder terms are filled only
/// for an affine encoder.
LossGradient cross_entropy_gradient(const ClassifierState& state, std::span<const LabeledFeature> data);

struct TrainOptions {
  int epochs = 50;
  double lr = 0.5;
};

struct TrainResult {
  ClassifierState state;
  /// Loss before each epoch's update, followed by the loss after the last one.
  std::vector<double> loss_curve;
};

/// Full-batch gradient descent on the mean cross-entropy. The softmax runs over
/// every known class, but only prototypes of classes labelled in `data` move.
/// An affine encoder trains unless frozen. Involves no randomness.
TrainResult train_epochs(ClassifierState state, std::span<const LabeledFeature> data,
                         const TrainOptions& opts);

/// Percentage of `eval_set` that ncm_predict labels correctly.
double session_accuracy(const ClassifierState& state, std::span<const LabeledFeature> eval_set);

/// Arithmetic mean of the session accuracies.
double average_accuracy(std::span<const double> history);

/// Text checkpoint. Lines, in order:
///   rewardloop-classifier 1
///   d <dim>
///   s <logit scale>
///   encoder identity|affine <frozen 0|1>
///   classes <n> <id_1> ... <id_n>
///   n lines of d prototype coordinates
///   (affine only) d lines of d entries of A, then one line of d entries of b
/// Reals are written as hex floats so a round trip is exact.
void save_checkpoint(const ClassifierState& state, std::ostream& out);
ClassifierState load_checkpoint(std::istream& in);

}  // namespace rewardloop

#endif  // REWARDLOOP_CLASSIFIER_HPP
