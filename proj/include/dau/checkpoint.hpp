#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dau/agents.hpp"
#include "dau/config.hpp"

namespace dau {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Training-loop state besides the networks.
struct LoopState {
  std::uint64_t epochs_done = 0;
  std::uint64_t env_steps = 0;  ///< summed over parallel environments
  std::vector<std::string> rng_states;  ///< textual engine states
  std::vector<std::vector<double>> ou_values;
};

struct Checkpoint {
  ExperimentConfig config;
  std::unique_ptr<Agent> agent;
  LoopState loop;
};

/// Layout: magic "DAUCKPT1", u32 version, config as key=value text, agent
/// blob, loop state. Numbers are little-endian.
void save_checkpoint(const std::string& path, const ExperimentConfig& cfg, const Agent& agent,
                     const LoopState& loop);
Checkpoint load_checkpoint(const std::string& path);

std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& s);

}  // namespace dau
