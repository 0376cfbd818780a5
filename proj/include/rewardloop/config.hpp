#ifndef REWARDLOOP_CONFIG_HPP
#define REWARDLOOP_CONFIG_HPP

#include <string>
#include <vector>

#include "rewardloop/protocol.hpp"

namespace rewardloop {

/// Experiment config files.
///
///   # comment
///   seed = 3
///   [sampler]
///   num_particles = 16
///
/// Keys before the first section are top-level; all others are addressed as
/// `section.key`, which is also the syntax of overrides. The `[prior]` section
/// takes `class_<id>` entries (see prior_to_config_text). Unknown keys,
/// duplicates and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// Applies one `key=value` override.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Every accepted key except the `prior.class_<id>` family, in file order.
std::vector<std::string> config_keys();

/// Current value of a key, formatted as the resolved config writes it.
std::string config_value(const ExperimentConfig& cfg, const std::string& key);

/// Complete config text. Parsing it yields a config that reproduces the run exactly.
std::string resolved_config_text(const ExperimentConfig& cfg);

}  // namespace rewardloop

#endif  // REWARDLOOP_CONFIG_HPP
