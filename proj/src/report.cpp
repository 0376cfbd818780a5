#include "rewardloop/report.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace rewardloop {

namespace {

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string results_csv(const RunReport& report) {
  std::string out = "session,n_seen_classes,session_accuracy,average_accuracy\n";
  for (const auto& s : report.sessions) {
    out += std::to_string(s.session) + "," + std::to_string(s.n_seen_classes) + "," + real_text(s.accuracy) + "," +
           real_text(s.average_accuracy) + "\n";
  }
  return out;
}

std::string generation_jsonl(const RunReport& report) {
  std::string out;
  for (const auto& g : report.generation) {
    nlohmann::ordered_json j;
    j["session"] = g.session;
    j["class"] = g.class_id;
    j["type"] = to_string(g.type);
    j["index"] = g.index;
    nlohmann::ordered_json comps = nlohmann::ordered_json::object();
    for (const auto& c : g.components) comps[c.name] = c.value;
    j["rewards"] = comps;
    j["combined"] = g.combined;
    j["ess"] = {{"min", g.min_ess}, {"final", g.final_ess}, {"resamples", g.resamples}};
    j["vm_reference"] = g.vm_reference;
    j["csca_fallback"] = g.csca_fallback;
    j["sample"] = std::vector<double>(g.sample.data(), g.sample.data() + g.sample.size());
    out += j.dump() + "\n";
  }
  return out;
}

std::string events_log(const RunReport& report) {
  std::string out;
  for (const auto& e : report.events) out += e.to_line() + "\n";
  return out;
}

std::string rewards_jsonl(const RunReport& report) {
  std::string out;
  for (const auto& r : report.reward_trace) {
    nlohmann::ordered_json j;
    j["sample_id"] = r.sample_id;
    j["class"] = r.class_id;
    j["component"] = r.component;
    j["value"] = r.value;
    j["n"] = r.n;
    j["lambda"] = r.lambda;
    j["timestep"] = r.timestep;
    out += j.dump() + "\n";
  }
  return out;
}

std::string notes_text(const RunReport& report) {
  std::string out;
  for (const auto& n : report.notes) out += n + "\n";
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::size_t sessions = 0;
  for (const auto& r : rows) sessions = std::max(sessions, r.session_accuracy.size());
  std::string out = "ladder_step,seed";
  for (std::size_t s = 0; s < sessions; ++s) out += ",session_" + std::to_string(s);
  out += ",average_accuracy,delta_last\n";
  for (const auto& r : rows) {
    out += r.ladder_step + "," + std::to_string(r.seed);
    double sum = 0.0;
    for (std::size_t s = 0; s < sessions; ++s) {
      out += ",";
      if (s < r.session_accuracy.size()) {
        out += real_text(r.session_accuracy[s]);
        sum += r.session_accuracy[s];
      }
    }
    const double avg = r.session_accuracy.empty() ? 0.0 : sum / static_cast<double>(r.session_accuracy.size());
    out += "," + real_text(avg) + "," + real_text(r.delta_last) + "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace rewardloop
