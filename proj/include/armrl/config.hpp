#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "armrl/agents.hpp"
#include "armrl/env.hpp"

namespace armrl::harness {

enum class AgentKind { kDQN, kPPO };

struct RunConfig {
  AgentKind agent = AgentKind::kPPO;
  env::EnvConfig env;
  agents::DQNConfig dqn;
  agents::PPOConfig ppo;
  std::int64_t total_steps = 40000;
  int trials = 3;
  std::uint64_t base_seed = 1;
  std::filesystem::path output_dir = "runs/default";
  bool parallel = true;
  int log_every = 0;  // progress line every N env steps per trial; 0 = silent

  void validate() const;
};

/// Ordered (key, value) pairs; later entries override earlier ones.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines. '#' starts a comment; blank lines are skipped.
/// Throws FormatError naming `source` and the line number.
KeyValues parse_key_values(const std::string& text, const std::string& source = "<config>");
KeyValues read_key_values(const std::filesystem::path& path);
/// "key=value" as given to --set.
std::pair<std::string, std::string> parse_override(const std::string& arg);

/// Builds a validated RunConfig. Unknown keys and unparsable values throw
/// ConfigError naming the key. total_steps and dqn epsilon decay default from
/// the agent kind when not given.
RunConfig build_run_config(const KeyValues& kv);
/// Every key build_run_config understands, in documentation order.
std::vector<std::string> known_keys();
/// Resolved configuration in the same key = value format.
std::string to_text(const RunConfig& cfg);

std::string agent_name(AgentKind k);
std::string variant_name(env::Variant v);
std::string observation_name(env::ObservationMode m);

}  // namespace armrl::harness
