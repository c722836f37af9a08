#pragma once

// Euler-Maruyama simulation of the jump-diffusion
//
//   dX = X [ h(X) dt + lambda dB + integral eps(y) Ntilde(dt, dy) ],
//
// with the compound-Poisson jump set of JumpConfig, and of its Lamperti
// transform dY = G(Y) dt + lambda dB in the Gaussian case.

#include <cstdint>
#include <ostream>
#include <vector>

#include "allee/levy.hpp"
#include "allee/model.hpp"

namespace allee {

struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<std::size_t> jump_marks;  // step indices i where a jump fired in (t_{i-1}, t_i]
  std::size_t jump_count = 0;           // total arrivals (a step may hold several)
  bool absorbed = false;
  ModelParams params;
  JumpConfig jumps;
  std::uint64_t seed = 0;
};

/// Jump configuration implied by the noise fields of ModelParams with the
/// default truncation (see JumpConfig::with_defaults).
JumpConfig jump_config_for(const ModelParams& p);

/// Multiplicative-noise Euler-Maruyama path on [0, T]. The step is adjusted
/// to T / round(T / dt). A step that would leave [0, inf) is clamped to 0 and
/// the path is absorbed. Jump noise is taken from cfg, which must agree with
/// p.alpha and p.epsilon. Throws DomainError when dt * nu(Y) > 10.
Trajectory simulate_path(const ModelParams& p, const JumpConfig& cfg, double x0, double T,
                         double dt, std::uint64_t seed);

/// Additive-noise path of Y = ln X (states are Y values). Requires
/// lambda > 0 and epsilon == 0.
Trajectory simulate_lamperti(const ModelParams& p, double y0, double T, double dt,
                             std::uint64_t seed);

struct HistogramSpec {
  double lo = 0.0;
  double hi = 15.0;
  int bins = 60;

  double width() const { return (hi - lo) / bins; }
  std::vector<double> edges() const;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;  // samples, including those outside [lo, hi)

  /// Fraction of all samples in each bin.
  std::vector<double> masses() const;
};

Histogram make_histogram(const std::vector<double>& values, const HistogramSpec& spec);

struct EnsembleOptions {
  HistogramSpec histogram;
  double extinction_threshold = 1e-4;
  int mean_path_points = 201;  // mean path sampled on this many evenly spaced times
};

struct EnsembleStats {
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double extinction_fraction = 0.0;
  double mean_jump_count = 0.0;
  Histogram terminal;
  std::vector<double> terminal_states;  // by path index
  std::vector<double> mean_times;
  std::vector<double> mean_path;
};

/// n_paths independent paths; path i uses seed derive_seed(seed, i).
/// Paths run in parallel and are reduced in index order.
EnsembleStats ensemble_stats(const ModelParams& p, const JumpConfig& cfg, double x0, double T,
                             double dt, std::size_t n_paths, std::uint64_t seed,
                             const EnsembleOptions& opts = {});

/// Terminal values exp(Y_T) of n_paths Lamperti paths started at ln(x0).
std::vector<double> lamperti_terminal_states(const ModelParams& p, double x0, double T, double dt,
                                             std::size_t n_paths, std::uint64_t seed);

/// CSV t,x,jump_flag.
void write_trajectory_csv(std::ostream& os, const Trajectory& path);

/// {extinction_fraction, n_paths, seed, histogram:{edges,counts}} plus the
/// mean jump count.
void write_ensemble_json(std::ostream& os, const EnsembleStats& stats);

}  // namespace allee
