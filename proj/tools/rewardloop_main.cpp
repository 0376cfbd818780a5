#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rewardloop/ablation.hpp"
#include "rewardloop/config.hpp"
#include "rewardloop/report.hpp"

namespace fs = std::filesystem;
using namespace rewardloop;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

ExperimentConfig resolve(const std::string& path, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg = load_config_file(path);
  for (const auto& o : overrides) apply_override(cfg, o);
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

fs::path output_dir(const std::string& flag, const ExperimentConfig& cfg, const std::string& fallback_leaf) {
  if (!flag.empty()) return flag;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  const char* root = std::getenv("REWARDLOOP_OUT");
  return fs::path(root && *root ? root : "out") / fallback_leaf;
}

void write_run(const fs::path& dir, const ExperimentConfig& cfg, const RunReport& rep) {
  fs::create_directories(dir);
  write_text_file((dir / "results.csv").string(), results_csv(rep));
  write_text_file((dir / "generation.jsonl").string(), generation_jsonl(rep));
  write_text_file((dir / "events.log").string(), events_log(rep));
  write_text_file((dir / "config.resolved").string(), resolved_config_text(cfg));
  write_text_file((dir / "notes.txt").string(), notes_text(rep));
  if (cfg.trace_rewards) write_text_file((dir / "rewards.jsonl").string(), rewards_jsonl(rep));
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tok.empty() || used != tok.size() || tok[0] == '-') throw ConfigError("bad seed '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--seeds is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-guided generation loop for few-shot class-incremental learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_flag;
  std::string ladder_name = "default";
  std::string seeds_text;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--set", overrides, "Override key=value (repeatable)");
  run->add_option("--out", out_flag, "Output directory");

  auto* ablate = app.add_subcommand("ablate", "Run an ablation ladder over several seeds");
  ablate->add_option("config", config_path, "Config file")->required();
  ablate->add_option("--ladder", ladder_name, "default or leave_one_out");
  ablate->add_option("--seeds", seeds_text, "Comma-separated seeds")->required();
  ablate->add_option("--set", overrides, "Override key=value (repeatable)");
  ablate->add_option("--out", out_flag, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ExperimentConfig cfg;
  std::vector<LadderStep> ladder;
  std::vector<std::uint64_t> seeds;
  try {
    cfg = resolve(config_path, overrides);
    if (*ablate) {
      ladder = named_ladder(ladder_name);
      seeds = parse_seeds(seeds_text);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*run) {
      const fs::path dir = output_dir(out_flag, cfg, "run-seed" + std::to_string(cfg.seed));
      const RunReport rep = mutual_boosting_run(cfg);
      write_run(dir, cfg, rep);
      std::cout << results_csv(rep);
      return 0;
    }
    const fs::path dir = output_dir(out_flag, cfg, "ablate-" + ladder_name);
    std::size_t k = 0;
    std::string current;
    auto on_run = [&](const LadderStep& step, std::uint64_t seed, const RunReport& rep) {
      if (step.name != current) {
        current = step.name;
        ++k;
      }
      ExperimentConfig run_cfg = cfg;
      run_cfg.seed = seed;
      run_cfg.rewards.enabled = step.flags;
      run_cfg.out_dir.clear();
      write_run(dir / ("step" + std::to_string(k - 1) + "_seed" + std::to_string(seed)), run_cfg, rep);
      std::cerr << step.name << " seed " << seed << ": final " << rep.sessions.back().accuracy << "\n";
    };
    const auto rows = run_ablation(cfg, ladder, seeds, on_run);
    fs::create_directories(dir);
    write_text_file((dir / "ablation.csv").string(), ablation_csv(rows));
    for (const auto& step : ladder) {
      std::cout << step.name << " median_final=" << median_final_accuracy(rows, step.name) << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
