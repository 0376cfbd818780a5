#include "rewardloop/protocol.hpp"

#include <algorithm>
#include <sstream>

#include "rewardloop/random.hpp"

namespace rewardloop {

void GenerationBudget::validate() const {
  if (n_base < 0 || n_new < 0 || n_old < 0) throw ParameterError("budget: counts must be >= 0");
}

std::string RewardFlags::label() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(pammd, "pammd");
  add(vm, "vm");
  add(rc, "rc");
  add(csca, "csca");
  return out.empty() ? "none" : out;
}

void RewardSettings::validate() const {
  if (!(alpha_div >= 0.0) || !(beta_cons >= 0.0)) throw ParameterError("rewards: alpha_div and beta_cons must be >= 0");
  if (vm_threshold < 2) throw ParameterError("rewards: vm_threshold must be >= 2");
  RcConfig{t_base, t_scale, 0}.validate();
  csca.validate();
}

void ClassifierSettings::validate() const {
  if (!(logit_scale > 0.0)) throw ParameterError("classifier: logit_scale must be > 0");
  if (base_epochs < 0 || base_finetune_epochs < 0 || inc_epochs < 0) {
    throw ParameterError("classifier: epochs must be >= 0");
  }
  if (!(base_lr > 0.0) || !(base_finetune_lr > 0.0) || !(inc_lr > 0.0)) {
    throw ParameterError("classifier: learning rates must be > 0");
  }
}

void ExperimentConfig::validate() const {
  benchmark.validate();
  budget.validate();
  sampler.validate();
  rewards.validate();
  classifier.validate();
  if (schedule.steps < 1) throw ParameterError("schedule: steps must be >= 1");
  make_schedule(schedule.steps, schedule.beta_min, schedule.beta_max);
  for (const auto& [id, comps] : prior_override) {
    if (id < 0 || id >= benchmark.num_classes()) throw ParameterError("prior: override for unknown class");
    for (const auto& c : comps) {
      if (c.mean.size() != benchmark.dim) throw ParameterError("prior: override has the wrong dimension");
    }
  }
}

const char* to_string(ClassType t) {
  switch (t) {
    case ClassType::kBase: return "base";
    case ClassType::kNew: return "new";
    case ClassType::kOld: return "old";
  }
  return "?";
}

std::string ProtocolEvent::to_line() const {
  std::string out = "session=" + std::to_string(session) + " step=" + step;
  if (class_id >= 0) out += " class=" + std::to_string(class_id);
  if (!detail.empty()) out += " " + detail;
  return out;
}

namespace {

// Seed path labels.
constexpr std::uint64_t kBenchmarkTag = 1;
constexpr std::uint64_t kSampleTag = 2;

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? "," : "") + std::to_string(ids[i]);
  return out;
}

Dataset build_dataset(const ExperimentConfig& cfg) {
  BenchmarkSpec spec = cfg.benchmark;
  spec.seed = derive_seed(cfg.seed, {kBenchmarkTag});
  Dataset data = make_benchmark(spec);
  for (const auto& [id, comps] : cfg.prior_override) data.prior.set_class(id, comps);
  return data;
}

Encoder initial_encoder(const ClassifierSettings& s, Eigen::Index d) {
  if (s.encoder == EncoderMode::kIdentity) return Encoder::identity();
  return Encoder::affine(Eigen::MatrixXd::Identity(d, d), FeatureVec::Zero(d));
}

}  // namespace

MutualBoostingLoop::MutualBoostingLoop(ExperimentConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      data_(build_dataset(cfg_)),
      sched_(make_schedule(cfg_.schedule.steps, cfg_.schedule.beta_min, cfg_.schedule.beta_max)),
      state_(ClassifierState(cfg_.benchmark.dim, cfg_.classifier.logit_scale,
                             initial_encoder(cfg_.classifier, cfg_.benchmark.dim))) {}

void MutualBoostingLoop::log(const std::string& step, int class_id, const std::string& detail) {
  report_.events.push_back({state_.session, step, class_id, detail});
}

void MutualBoostingLoop::register_class_statistics(int class_id, const std::vector<FeatureVec>& real) {
  std::vector<FeatureVec> enc;
  enc.reserve(real.size());
  for (const auto& x : real) enc.push_back(state_.classifier.encode(x));
  double h = 0.0;
  try {
    h = median_bandwidth(enc).value();
  } catch (const DegenerateInputError&) {
    h = 0.0;
  }
  if (!(h > 0.0)) {
    double sum = 0.0;
    for (const auto& [id, bw] : state_.bandwidths) sum += bw;
    h = state_.bandwidths.empty() ? 1.0 : sum / static_cast<double>(state_.bandwidths.size());
    report_.notes.push_back("class " + std::to_string(class_id) +
                            ": kernel bandwidth taken from other classes (too few distinct real features)");
  }
  state_.bandwidths[class_id] = h;
  if (enc.size() >= 2) {
    state_.real_variance[class_id] = two_pass_variance(enc);
    state_.has_real_variance[class_id] = true;
  } else {
    state_.has_real_variance[class_id] = false;
  }
}

MutualBoostingLoop::ClassGeneration MutualBoostingLoop::generate_for_class(
    int class_id, ClassType type, int count, const ClassifierState& snapshot, const std::vector<int>& candidates) {
  ClassGeneration out;
  if (count == 0) return out;
  const RewardSettings& rs = cfg_.rewards;
  const bool use_rc = rs.enabled.rc && type == ClassType::kNew;
  const bool use_csca = rs.enabled.csca && type != ClassType::kNew;

  const Prototype& proto = snapshot.prototype(class_id);
  const int target = snapshot.index_of(class_id);
  std::vector<int> candidate_idx;
  for (int c : candidates) {
    if (c != class_id && snapshot.has_class(c)) candidate_idx.push_back(snapshot.index_of(c));
  }
  std::sort(candidate_idx.begin(), candidate_idx.end());

  PammdState pammd(proto, Bandwidth(state_.bandwidths.at(class_id)), rs.alpha_div, rs.beta_cons);

  // Where the variance target comes from.
  std::string vm_source = "none";
  std::optional<VmState> vm;
  if (rs.enabled.vm) {
    if (type != ClassType::kOld && state_.has_real_variance[class_id]) {
      vm.emplace(state_.real_variance.at(class_id), rs.vm_threshold);
      vm_source = "real";
    } else {
      const auto& pool = state_.generated_pools[class_id];
      if (pool.size() >= 2) {
        std::vector<FeatureVec> enc;
        for (const auto& x : pool) enc.push_back(snapshot.encode(x));
        vm.emplace(two_pass_variance(enc), rs.vm_threshold);
        vm_source = "generated";
        report_.notes.push_back("session " + std::to_string(state_.session) + " class " +
                                std::to_string(class_id) +
                                ": variance target computed from retained generated samples (" +
                                std::to_string(pool.size()) + ")");
      }
    }
  }
  const RcConfig rc_cfg{rs.t_base, rs.t_scale, static_cast<int>(snapshot.num_classes())};
  const std::span<const Prototype> protos(snapshot.prototypes());
  const std::span<const int> cand_span(candidate_idx);

  struct Eval {
    std::vector<RewardComponent> components;
    double combined = 0.0;
    bool fallback = false;
  };
  auto evaluate_components = [&](const FeatureVec& x0_hat) {
    Eval e;
    const FeatureVec f = snapshot.encode(x0_hat);
    if (rs.enabled.pammd) {
      e.components.push_back({"pammd", pammd.reward_with(f)});
      e.combined += rs.weight_pammd * e.components.back().value;
    }
    if (vm) {
      e.components.push_back({"vm", vm->reward_with(f)});
      e.combined += rs.weight_vm * e.components.back().value;
    }
    if (use_rc || use_csca) {
      const Eigen::VectorXd lg = logits_of_feature(snapshot, f);
      if (use_rc) {
        e.components.push_back({"rc", rc_reward(lg, target, rc_cfg)});
        e.combined += rs.weight_rc * e.components.back().value;
      }
      if (use_csca) {
        const CscaResult r = csca_reward(f, lg, target, protos, rs.csca, cand_span);
        e.components.push_back({"csca", r.value});
        e.combined += rs.weight_csca * r.value;
        e.fallback = r.fallback;
      }
    }
    return e;
  };

  for (int i = 0; i < count; ++i) {
    SamplerConfig sc = cfg_.sampler;
    sc.seed = derive_seed(cfg_.seed, {kSampleTag, static_cast<std::uint64_t>(state_.session),
                                      static_cast<std::uint64_t>(class_id), static_cast<std::uint64_t>(i)});
    const long sample_id = sample_counter_++;
    int cur_t = 0;
    double cur_lambda = 0.0;
    RewardFn reward_fn;
    if (rs.enabled.pammd || vm || use_rc || use_csca) {
      reward_fn = [&](const FeatureVec& x0_hat) {
        Eval e = evaluate_components(x0_hat);
        if (cfg_.trace_rewards) {
          for (const auto& c : e.components) {
            report_.reward_trace.push_back({sample_id, class_id, c.name, c.value, pammd.size(), cur_lambda, cur_t});
          }
        }
        return e.combined;
      };
    }
    StepHook hook = [&](int t, double lambda) {
      cur_t = t;
      cur_lambda = lambda;
    };
    SamplerResult res;
    try {
      res = smc_generate(class_id, reward_fn, data_.prior, sched_, sc, hook);
    } catch (const SamplerError& e) {
      throw StageError("session " + std::to_string(state_.session) + ", class " + std::to_string(class_id) +
                           ", sample " + std::to_string(i) + ": " + e.what(),
                       state_.session, class_id);
    }

    GenerationRecord rec;
    rec.session = state_.session;
    rec.class_id = class_id;
    rec.type = type;
    rec.index = i;
    const Eval final_eval = evaluate_components(res.sample);
    rec.components = final_eval.components;
    rec.combined = final_eval.combined;
    rec.csca_fallback = final_eval.fallback;
    rec.min_ess = res.trace.min_ess;
    rec.final_ess = res.trace.steps.empty() ? 0.0 : res.trace.steps.back().ess;
    rec.resamples = res.trace.resample_count;
    rec.vm_reference = vm_source;
    rec.sample = res.sample;
    report_.generation.push_back(std::move(rec));

    const FeatureVec f = snapshot.encode(res.sample);
    pammd.push(f);
    if (vm) vm->push(f);
    out.samples.push_back(std::move(res.sample));
  }
  return out;
}

void MutualBoostingLoop::evaluate() {
  const auto eval_set = eval_subset(data_, state_.seen_classes);
  const double acc = session_accuracy(state_.classifier, eval_set);
  state_.accuracy_history.push_back(acc);
  SessionResult r;
  r.session = state_.session;
  r.n_seen_classes = static_cast<int>(state_.seen_classes.size());
  r.accuracy = acc;
  r.average_accuracy = average_accuracy(state_.accuracy_history);
  report_.sessions.push_back(r);
  report_.average_accuracy = r.average_accuracy;
  std::ostringstream d;
  d.precision(17);
  d << "classes=" << state_.seen_classes.size() << " accuracy=" << acc;
  log("evaluate", -1, d.str());
}

void MutualBoostingLoop::run_base_session() {
  if (state_.session != -1) throw ParameterError("base session already ran");
  state_.session = 0;
  const SessionSplit& base = data_.sessions.at(0);
  if (base.train.empty()) throw ParameterError("base split is empty");
  const ClassifierSettings& cs = cfg_.classifier;

  log("define_classes", -1, "base=" + join_ids(base.classes));

  std::map<int, std::vector<FeatureVec>> per_class;
  for (const auto& item : base.train) per_class[item.class_id].push_back(item.x);
  state_.classifier = init_prototypes(std::move(state_.classifier), per_class);
  state_.classifier = train_epochs(std::move(state_.classifier), base.train, {cs.base_epochs, cs.base_lr}).state;
  log("train_base", -1, "items=" + std::to_string(base.train.size()));
  for (int c : base.classes) register_class_statistics(c, per_class[c]);

  log("reward_set", -1, "type=base rewards=" + RewardFlags{cfg_.rewards.enabled.pammd, cfg_.rewards.enabled.vm,
                                                           false, cfg_.rewards.enabled.csca}.label());
  const ClassifierState snapshot = state_.classifier;
  std::vector<LabeledFeature> batch = base.train;
  std::size_t generated = 0;
  for (int c : base.classes) {
    ClassGeneration g = generate_for_class(c, ClassType::kBase, cfg_.budget.n_base, snapshot, base.classes);
    log("generate", c, "type=base count=" + std::to_string(g.samples.size()));
    for (const auto& x : g.samples) {
      batch.push_back({x, c});
      state_.generated_pools[c].push_back(x);
      ++generated;
    }
  }

  state_.classifier =
      train_epochs(std::move(state_.classifier), batch, {cs.base_finetune_epochs, cs.base_finetune_lr}).state;
  BatchAudit audit;
  audit.session = 0;
  audit.real_items = base.train.size();
  audit.generated_items = generated;
  audit.real_classes = base.classes;
  report_.batches.push_back(audit);
  log("finetune", -1, "real=" + std::to_string(audit.real_items) + " generated=" + std::to_string(generated));
  if (cs.encoder == EncoderMode::kAffine && cs.freeze_encoder_after_base) state_.classifier.set_encoder_frozen(true);

  state_.seen_classes = base.classes;
  log("update_seen", -1, "seen=" + join_ids(state_.seen_classes));
  evaluate();
}

void MutualBoostingLoop::run_incremental_session() {
  if (state_.session < 0) throw ParameterError("run the base session first");
  const int t = state_.session + 1;
  if (t >= static_cast<int>(data_.sessions.size())) throw ParameterError("no incremental sessions left");
  state_.session = t;
  const SessionSplit& split = data_.sessions.at(t);
  const ClassifierSettings& cs = cfg_.classifier;

  const std::vector<int> new_classes = split.classes;
  const std::vector<int> old_classes = state_.seen_classes;
  log("define_classes", -1, "new=" + join_ids(new_classes) + " old=" + join_ids(old_classes));

  std::map<int, std::vector<FeatureVec>> shots;
  for (const auto& item : split.train) shots[item.class_id].push_back(item.x);
  state_.classifier = init_prototypes(std::move(state_.classifier), shots);
  for (int c : new_classes) register_class_statistics(c, shots[c]);
  log("init_prototypes", -1, "classes=" + join_ids(new_classes));

  const ClassifierState snapshot = state_.classifier;
  std::vector<int> all_known = old_classes;
  all_known.insert(all_known.end(), new_classes.begin(), new_classes.end());

  std::vector<LabeledFeature> batch = split.train;
  std::size_t generated = 0;
  std::map<int, std::vector<FeatureVec>> fresh;

  log("reward_set", -1, "type=new rewards=" + RewardFlags{cfg_.rewards.enabled.pammd, cfg_.rewards.enabled.vm,
                                                          cfg_.rewards.enabled.rc, false}.label());
  for (int c : new_classes) {
    ClassGeneration g = generate_for_class(c, ClassType::kNew, cfg_.budget.n_new, snapshot, all_known);
    log("generate", c, "type=new count=" + std::to_string(g.samples.size()));
    fresh[c] = std::move(g.samples);
  }
  log("reward_set", -1, "type=old rewards=" + RewardFlags{cfg_.rewards.enabled.pammd, cfg_.rewards.enabled.vm,
                                                          false, cfg_.rewards.enabled.csca}.label());
  for (int c : old_classes) {
    ClassGeneration g = generate_for_class(c, ClassType::kOld, cfg_.budget.n_old, snapshot, all_known);
    log("generate", c, "type=old count=" + std::to_string(g.samples.size()));
    fresh[c] = std::move(g.samples);
  }
  for (int c : all_known) {
    for (const auto& x : fresh[c]) {
      batch.push_back({x, c});
      state_.generated_pools[c].push_back(x);
      ++generated;
    }
  }
  log("assemble_batch", -1, "real=" + std::to_string(split.train.size()) + " generated=" + std::to_string(generated));

  state_.classifier = train_epochs(std::move(state_.classifier), batch, {cs.inc_epochs, cs.inc_lr}).state;
  BatchAudit audit;
  audit.session = t;
  audit.real_items = split.train.size();
  audit.generated_items = generated;
  for (const auto& item : split.train) {
    if (std::find(audit.real_classes.begin(), audit.real_classes.end(), item.class_id) == audit.real_classes.end()) {
      audit.real_classes.push_back(item.class_id);
    }
  }
  report_.batches.push_back(audit);
  log("finetune", -1, "items=" + std::to_string(batch.size()));

  state_.seen_classes = all_known;
  log("update_seen", -1, "seen=" + join_ids(state_.seen_classes));
  evaluate();
}

void MutualBoostingLoop::run_all() {
  run_base_session();
  for (int t = 1; t <= cfg_.benchmark.num_sessions; ++t) run_incremental_session();
}

RunReport mutual_boosting_run(const ExperimentConfig& cfg) {
  MutualBoostingLoop loop(cfg);
  loop.run_all();
  return loop.take_report();
}

}  // namespace rewardloop
