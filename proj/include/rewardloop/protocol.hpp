#ifndef REWARDLOOP_PROTOCOL_HPP
#define REWARDLOOP_PROTOCOL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rewardloop/benchmark.hpp"
#include "rewardloop/classifier.hpp"
#include "rewardloop/das_sampler.hpp"
#include "rewardloop/rewards.hpp"
#include "rewardloop/toy_diffusion.hpp"

namespace rewardloop {

/// Generated samples per class for each class type.
struct GenerationBudget {
  int n_base = 12;
  int n_new = 12;
  int n_old = 4;

  void validate() const;
};

struct RewardFlags {
  bool pammd = true;
  bool vm = true;
  bool rc = true;
  bool csca = true;

  bool any() const { return pammd || vm || rc || csca; }
  std::string label() const;
};

struct RewardSettings {
  RewardFlags enabled;
  double weight_pammd = 1.0;
  double weight_vm = 1.0;
  double weight_rc = 1.0;
  double weight_csca = 1.0;

  double alpha_div = 1.0;
  double beta_cons = 2.0;
  int vm_threshold = 6;
  double t_base = 2.0;
  double t_scale = 1.0;
  CscaConfig csca;

  void validate() const;
};

struct ScheduleSettings {
  int steps = 50;
  double beta_min = 1e-4;
  double beta_max = 0.2;
};

struct ClassifierSettings {
  double logit_scale = 16.0;
  EncoderMode encoder = EncoderMode::kIdentity;
  /// Freeze an affine encoder once the base session is done.
  bool freeze_encoder_after_base = true;
  int base_epochs = 100;
  double base_lr = 1.0;
  int base_finetune_epochs = 30;
  double base_finetune_lr = 0.5;
  int inc_epochs = 60;
  double inc_lr = 0.5;

  void validate() const;
};

struct ExperimentConfig {
  BenchmarkSpec benchmark;
  GenerationBudget budget;
  SamplerConfig sampler;
  RewardSettings rewards;
  ClassifierSettings classifier;
  ScheduleSettings schedule;
  /// Root seed; benchmark, training and every generated sample derive from it.
  std::uint64_t seed = 0;
  std::string out_dir;
  /// Record every reward evaluation (large).
  bool trace_rewards = false;
  /// Explicit generator mixtures that replace the derived ones, keyed by class.
  std::map<int, std::vector<GaussianComponent>> prior_override;

  void validate() const;
};

enum class ClassType { kBase, kNew, kOld };
const char* to_string(ClassType t);

/// One accepted generated sample.
struct GenerationRecord {
  int session = 0;
  int class_id = 0;
  ClassType type = ClassType::kBase;
  int index = 0;
  std::vector<RewardComponent> components;
  double combined = 0.0;
  double min_ess = 0.0;
  double final_ess = 0.0;
  int resamples = 0;
  /// Where the variance target came from: "real", "generated" or "none".
  std::string vm_reference;
  bool csca_fallback = false;
  FeatureVec sample;
};

struct SessionResult {
  int session = 0;
  int n_seen_classes = 0;
  double accuracy = 0.0;
  double average_accuracy = 0.0;
};

/// Audit of one protocol step.
struct ProtocolEvent {
  int session = 0;
  std::string step;
  int class_id = -1;
  std::string detail;

  std::string to_line() const;
};

/// Composition of one fine-tuning batch.
struct BatchAudit {
  int session = 0;
  std::size_t real_items = 0;
  std::size_t generated_items = 0;
  /// Classes of the real items in the batch.
  std::vector<int> real_classes;
};

struct SessionState {
  int session = -1;
  std::vector<int> seen_classes;
  ClassifierState classifier;
  /// Every generated sample per class, retained across sessions.
  std::map<int, std::vector<FeatureVec>> generated_pools;
  /// Kernel bandwidth per class, fixed when the class is first seen.
  std::map<int, double> bandwidths;
  /// Variance targets measured on real data when the class was introduced.
  std::map<int, bool> has_real_variance;
  std::map<int, FeatureVec> real_variance;
  std::vector<double> accuracy_history;

  explicit SessionState(ClassifierState c) : classifier(std::move(c)) {}
};

struct RunReport {
  std::vector<SessionResult> sessions;
  double average_accuracy = 0.0;
  std::vector<GenerationRecord> generation;
  std::vector<ProtocolEvent> events;
  std::vector<BatchAudit> batches;
  std::vector<RewardTraceRecord> reward_trace;
  std::vector<std::string> notes;
};

/// Stateful driver for one full run; sessions must be executed in order.
class MutualBoostingLoop {
 public:
  explicit MutualBoostingLoop(ExperimentConfig cfg);

  const Dataset& dataset() const noexcept { return data_; }
  const SessionState& state() const noexcept { return state_; }
  const RunReport& report() const noexcept { return report_; }
  RunReport take_report() { return std::move(report_); }

  /// Base session: train on real data, generate for base classes, fine-tune, evaluate.
  void run_base_session();
  /// Next incremental session.
  void run_incremental_session();
  /// Base session followed by every incremental session.
  void run_all();

 private:
  struct ClassGeneration {
    std::vector<FeatureVec> samples;
  };

  ClassGeneration generate_for_class(int class_id, ClassType type, int count,
                                     const ClassifierState& snapshot, const std::vector<int>& old_classes);
  void register_class_statistics(int class_id, const std::vector<FeatureVec>& real);
  void evaluate();
  void log(const std::string& step, int class_id = -1, const std::string& detail = "");

  ExperimentConfig cfg_;
  Dataset data_;
  NoiseSchedule sched_;
  SessionState state_;
  RunReport report_;
  long sample_counter_ = 0;
};

RunReport mutual_boosting_run(const ExperimentConfig& cfg);

}  // namespace rewardloop

#endif  // REWARDLOOP_PROTOCOL_HPP
