#ifndef REWARDLOOP_REPORT_HPP
#define REWARDLOOP_REPORT_HPP

#include <string>
#include <vector>

#include "rewardloop/protocol.hpp"

namespace rewardloop {

/// Header: session,n_seen_classes,session_accuracy,average_accuracy
std::string results_csv(const RunReport& report);

/// One JSON object per generated sample.
std::string generation_jsonl(const RunReport& report);

/// One ProtocolEvent::to_line per line.
std::string events_log(const RunReport& report);

/// One JSON object per reward evaluation inside the sampler.
std::string rewards_jsonl(const RunReport& report);

/// Substitutions and fallbacks the run had to make, one per line.
std::string notes_text(const RunReport& report);

struct AblationRow {
  std::string ladder_step;
  std::uint64_t seed = 0;
  std::vector<double> session_accuracy;
  /// Final-session accuracy minus that of the first ladder step with the same seed.
  double delta_last = 0.0;
};

/// Header: ladder_step,seed,session_0,...,session_T,average_accuracy,delta_last
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Writes `content` to `path`, replacing any existing file.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace rewardloop

#endif  // REWARDLOOP_REPORT_HPP
