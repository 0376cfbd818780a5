#include "rewardloop/ablation.hpp"

#include <algorithm>
#include <map>

namespace rewardloop {

std::vector<LadderStep> named_ladder(const std::string& name) {
  if (name == "default") {
    return {{"baseline", {false, false, false, false}},
            {"+pammd", {true, false, false, false}},
            {"+vm", {true, true, false, false}},
            {"+rc", {true, true, true, false}},
            {"+csca", {true, true, true, true}}};
  }
  if (name == "leave_one_out") {
    return {{"all", {true, true, true, true}},
            {"-pammd", {false, true, true, true}},
            {"-vm", {true, false, true, true}},
            {"-rc", {true, true, false, true}},
            {"-csca", {true, true, true, false}}};
  }
  throw ConfigError("unknown ladder '" + name + "' (expected default or leave_one_out)");
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const std::vector<LadderStep>& ladder,
                                      const std::vector<std::uint64_t>& seeds, const RunCallback& on_run) {
  if (ladder.empty()) throw ParameterError("ablation ladder is empty");
  std::vector<AblationRow> rows;
  std::map<std::uint64_t, double> first_final;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.seed = seed;
      cfg.rewards.enabled = ladder[k].flags;
      RunReport rep;
      try {
        rep = mutual_boosting_run(cfg);
      } catch (const Error& e) {
        throw Error("ablation step " + ladder[k].name + ", seed " + std::to_string(seed) + ": " + e.what());
      }
      AblationRow row;
      row.ladder_step = ladder[k].name;
      row.seed = seed;
      for (const auto& s : rep.sessions) row.session_accuracy.push_back(s.accuracy);
      const double last = row.session_accuracy.empty() ? 0.0 : row.session_accuracy.back();
      if (k == 0) first_final[seed] = last;
      row.delta_last = last - first_final.at(seed);
      rows.push_back(std::move(row));
      if (on_run) on_run(ladder[k], seed, rep);
    }
  }
  return rows;
}

double median_final_accuracy(const std::vector<AblationRow>& rows, const std::string& step) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.ladder_step == step && !r.session_accuracy.empty()) v.push_back(r.session_accuracy.back());
  }
  if (v.empty()) throw ParameterError("no rows for ladder step '" + step + "'");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace rewardloop
