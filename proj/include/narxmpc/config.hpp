#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "narxmpc/agent.hpp"
#include "narxmpc/plant.hpp"

namespace narxmpc {

struct PlantConfig {
  enum class Kind { Linear, Pendulum };
  Kind kind = Kind::Linear;
  LinearArPlant::Params linear;
  PendulumPlant::Params pendulum;
};

struct EpisodeConfig {
  long length = 0;
  std::uint64_t seed = 1;
  double goal_band = 0.3;  // |y - goal| threshold for the success criterion
  int goal_hold = 20;      // consecutive steps the band must hold
};

struct ExperimentConfig {
  PlantConfig plant;
  AgentConfig agent;
  EpisodeConfig episode;
};

/// Parse the sectioned key-value experiment config. Unknown or missing keys
/// raise std::invalid_argument naming the offending "section.key".
ExperimentConfig parse_experiment_config(std::istream& in,
                                         const std::string& source_name);

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace narxmpc
