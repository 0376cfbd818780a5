#include "rewardloop/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace rewardloop {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long to_int(const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("expected an integer, got '" + v + "'");
  return x;
}

int to_int32(const std::string& v) {
  const long long x = to_int(v);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError("integer out of range: '" + v + "'");
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v) {
  errno = 0;
  char* end = nullptr;
  if (v.empty() || v[0] == '-') throw ConfigError("expected a nonnegative integer, got '" + v + "'");
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) throw ConfigError("expected a nonnegative integer, got '" + v + "'");
  return x;
}

double to_real(const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError("expected a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::vector<std::pair<int, int>> to_pairs(const std::string& v) {
  std::vector<std::pair<int, int>> out;
  if (v == "none") return out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw ConfigError("confusable pair must be a-b, got '" + item + "'");
    out.emplace_back(to_int32(trim(item.substr(0, dash))), to_int32(trim(item.substr(dash + 1))));
  }
  if (out.empty()) throw ConfigError("confusable_pairs is empty; write 'none' for no pairs");
  return out;
}

std::string pairs_text(const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out += (i ? "," : "") + std::to_string(pairs[i].first) + "-" + std::to_string(pairs[i].second);
  }
  return out;
}

struct Binding {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define RL_INT(KEY, FIELD)                                                            \
  Binding {                                                                           \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_int32(v); },    \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }             \
  }
#define RL_REAL(KEY, FIELD)                                                           \
  Binding {                                                                           \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_real(v); },     \
        [](const ExperimentConfig& c) { return real_text(c.FIELD); }                  \
  }
#define RL_BOOL(KEY, FIELD)                                                           \
  Binding {                                                                           \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_bool(v); },     \
        [](const ExperimentConfig& c) { return bool_text(c.FIELD); }                  \
  }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64(v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
       [](const ExperimentConfig& c) { return c.out_dir; }},

      RL_INT("benchmark.dim", benchmark.dim),
      RL_INT("benchmark.num_base_classes", benchmark.num_base_classes),
      RL_INT("benchmark.num_sessions", benchmark.num_sessions),
      RL_INT("benchmark.way", benchmark.way),
      RL_INT("benchmark.shot", benchmark.shot),
      RL_INT("benchmark.samples_per_base_class", benchmark.samples_per_base_class),
      RL_INT("benchmark.eval_per_class", benchmark.eval_per_class),
      RL_REAL("benchmark.mean_norm", benchmark.mean_norm),
      RL_REAL("benchmark.within_std", benchmark.within_std),
      RL_REAL("benchmark.var_spread", benchmark.var_spread),
      RL_REAL("benchmark.base_cos", benchmark.base_cos),
      RL_REAL("benchmark.confusable_cos", benchmark.confusable_cos),
      {"benchmark.confusable_pairs",
       [](ExperimentConfig& c, const std::string& v) { c.benchmark.confusable_pairs = to_pairs(v); },
       [](const ExperimentConfig& c) { return pairs_text(c.benchmark.confusable_pairs); }},
      RL_REAL("benchmark.shift_fraction", benchmark.miscalibration.shift_fraction),
      RL_REAL("benchmark.var_inflation", benchmark.miscalibration.var_inflation),
      RL_REAL("benchmark.spurious_weight", benchmark.miscalibration.spurious_weight),
      RL_REAL("benchmark.spurious_pull", benchmark.spurious_pull),

      RL_INT("budget.n_base", budget.n_base),
      RL_INT("budget.n_new", budget.n_new),
      RL_INT("budget.n_old", budget.n_old),

      RL_INT("sampler.num_particles", sampler.num_particles),
      RL_REAL("sampler.alpha_das", sampler.alpha_das),
      RL_REAL("sampler.tempering_gamma", sampler.tempering_gamma),
      RL_REAL("sampler.resample_threshold", sampler.resample_threshold),
      RL_BOOL("sampler.argmax_output", sampler.argmax_output),

      RL_BOOL("rewards.pammd", rewards.enabled.pammd),
      RL_BOOL("rewards.vm", rewards.enabled.vm),
      RL_BOOL("rewards.rc", rewards.enabled.rc),
      RL_BOOL("rewards.csca", rewards.enabled.csca),
      RL_REAL("rewards.weight_pammd", rewards.weight_pammd),
      RL_REAL("rewards.weight_vm", rewards.weight_vm),
      RL_REAL("rewards.weight_rc", rewards.weight_rc),
      RL_REAL("rewards.weight_csca", rewards.weight_csca),
      RL_REAL("rewards.alpha_div", rewards.alpha_div),
      RL_REAL("rewards.beta_cons", rewards.beta_cons),
      RL_INT("rewards.vm_threshold", rewards.vm_threshold),
      RL_REAL("rewards.t_base", rewards.t_base),
      RL_REAL("rewards.t_scale", rewards.t_scale),
      RL_REAL("rewards.gamma", rewards.csca.gamma),
      RL_INT("rewards.top_k", rewards.csca.top_k),
      RL_REAL("rewards.t_s", rewards.csca.t_s),
      RL_BOOL("rewards.include_target", rewards.csca.include_target),

      RL_REAL("classifier.logit_scale", classifier.logit_scale),
      {"classifier.encoder",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "identity") c.classifier.encoder = EncoderMode::kIdentity;
         else if (v == "affine") c.classifier.encoder = EncoderMode::kAffine;
         else throw ConfigError("encoder must be identity or affine, got '" + v + "'");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.classifier.encoder == EncoderMode::kAffine ? "affine" : "identity");
       }},
      RL_BOOL("classifier.freeze_encoder_after_base", classifier.freeze_encoder_after_base),
      RL_INT("classifier.base_epochs", classifier.base_epochs),
      RL_REAL("classifier.base_lr", classifier.base_lr),
      RL_INT("classifier.base_finetune_epochs", classifier.base_finetune_epochs),
      RL_REAL("classifier.base_finetune_lr", classifier.base_finetune_lr),
      RL_INT("classifier.inc_epochs", classifier.inc_epochs),
      RL_REAL("classifier.inc_lr", classifier.inc_lr),

      RL_INT("schedule.steps", schedule.steps),
      RL_REAL("schedule.beta_min", schedule.beta_min),
      RL_REAL("schedule.beta_max", schedule.beta_max),

      RL_BOOL("output.trace_rewards", trace_rewards),
  };
  return table;
}

#undef RL_INT
#undef RL_REAL
#undef RL_BOOL

const Binding* find_binding(const std::string& key) {
  for (const auto& b : bindings()) {
    if (b.key == key) return &b;
  }
  return nullptr;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string prior_prefix = "prior.class_";
  if (key.rfind(prior_prefix, 0) == 0) {
    const int id = to_int32(key.substr(prior_prefix.size()));
    try {
      cfg.prior_override[id] = parse_prior_components(value);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string(e.what()));
    }
    return;
  }
  const Binding* b = find_binding(key);
  if (!b) throw ConfigError("unknown key '" + key + "'");
  try {
    b->set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

const std::set<std::string>& sections() {
  static const std::set<std::string> s = {"benchmark", "budget",   "sampler", "rewards",
                                          "classifier", "schedule", "output",  "prior"};
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (name.empty()) throw ConfigError(where + "empty key");
    const std::string key = section.empty() ? name : section + "." + name;
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      set_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value, got '" + assignment + "'");
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& b : bindings()) out.push_back(b.key);
  return out;
}

std::string config_value(const ExperimentConfig& cfg, const std::string& key) {
  const Binding* b = find_binding(key);
  if (!b) throw ConfigError("unknown key '" + key + "'");
  return b->get(cfg);
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& b : bindings()) {
    const auto dot = b.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : b.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? b.key : b.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + b.get(cfg) + "\n";
  }
  if (!cfg.prior_override.empty()) {
    GmmPrior p;
    for (const auto& [id, comps] : cfg.prior_override) p.set_class(id, comps);
    out += "\n[prior]\n" + prior_to_config_text(p);
  }
  return out;
}

}  // namespace rewardloop
