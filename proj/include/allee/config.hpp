#pragma once

// Experiment configuration: a YAML document with the flat sections
// model, jumps, grid, solver and run. Every key is optional except
// run.experiment; unknown keys are rejected. See README for the grammar.

#include <cstdint>
#include <string>
#include <vector>

#include "allee/fpe.hpp"
#include "allee/levy.hpp"
#include "allee/model.hpp"

namespace allee {

struct SolverSettings {
  double T = 10.0;
  double dt = 0.01;               // SDE step
  std::int64_t n_paths = 500;     // ensemble size
  std::int64_t n_steps = 2000;    // shooting steps
  double dt_pde = 0.0;            // <= 0: largest stable step
  double output_every = 0.05;     // FPE slice spacing
  std::vector<double> x0 = {0.3, 5.0};
  std::vector<double> lambdas = {0.2, 0.4, 0.6};
  double x_left = 1e-3;           // regularized extinction state for shooting
  double tolerance = 1e-6;        // shooting terminal tolerance
  double gamma3_min = 0.5;
  double gamma3_max = 4.0;
  std::int64_t scan_steps = 351;
  HandlingCoupling coupling = HandlingCoupling::kFixedHandlingTime;
  int histogram_bins = 60;
  double prominence = 0.01;

  bool operator==(const SolverSettings&) const = default;
};

struct RunSettings {
  std::string experiment;
  std::string out_dir = "out";
  std::uint64_t seed = 42;

  bool operator==(const RunSettings&) const = default;
};

struct ExperimentConfig {
  ModelParams model;
  JumpConfig jumps;  // alpha and epsilon mirror model
  JumpQuadratureOptions quadrature;
  Grid1D grid;
  SolverSettings solver;
  RunSettings run;

  bool operator==(const ExperimentConfig& o) const {
    return model == o.model && jumps == o.jumps && quadrature.rule == o.quadrature.rule &&
           quadrature.nodes == o.quadrature.nodes && grid == o.grid && solver == o.solver &&
           run == o.run;
  }
};

const std::vector<std::string>& known_recipes();

/// Parses and validates a config document. Throws ConfigError carrying the
/// 1-based line of the offending node when it is known.
ExperimentConfig parse_config(const std::string& text);

/// Checks all invariants; throws ConfigError naming the first violation.
void validate_config(const ExperimentConfig& cfg);

/// Complete document with every effective value; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& cfg);

const char* to_string(HandlingCoupling c);
const char* to_string(JumpQuadrature q);

}  // namespace allee
