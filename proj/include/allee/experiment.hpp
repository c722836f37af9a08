#pragma once

// Named experiment recipes. Each writes plot-ready CSV/JSON artifacts into
// the configured output directory plus a manifest.json that lists them.

#include <filesystem>
#include <string>
#include <vector>

#include "allee/config.hpp"

namespace allee {

struct Manifest {
  std::filesystem::path out_dir;
  std::vector<std::string> files;  // artifact names relative to out_dir, manifest excluded
  double wall_time = 0.0;          // seconds
};

/// Runs cfg.run.experiment. Throws ConfigError for unknown recipes and lets
/// module errors (DomainError, NumericalError) propagate.
Manifest run_experiment(const ExperimentConfig& cfg);

}  // namespace allee
