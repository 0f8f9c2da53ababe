#pragma once

#include <string>
#include <vector>

#include "barl/barl_loop.hpp"

namespace barl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A run matrix: one base RunConfig plus the seeds and strategies to sweep.
struct ExperimentConfig {
  RunConfig base;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<AcquisitionKind> strategies;
  std::string out_dir;
};

// Parses the flat key-value config format (dotted keys, '#' comments).
// Unknown keys are errors. See README for the schema.
ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config_text(const std::string& text);

}  // namespace barl
