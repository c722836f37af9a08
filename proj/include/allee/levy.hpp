#pragma once

// Symmetric alpha-stable law, its Levy measure
//   nu_alpha(dz) = c_alpha |z|^(-1-alpha) dz,
// and the truncated compound-Poisson jump set delta <= |y| <= r_max that
// drives the multiplicative jumps X -> X (1 + epsilon y).

#include <cstdint>
#include <vector>

#include "allee/random.hpp"

namespace allee {

struct JumpConfig {
  double alpha = 1.5;
  double epsilon = 0.0;
  double delta = 0.1;
  double r_max = 10.0;
  bool symmetric = true;

  /// delta = 0.1 and r_max = min(10, (1 - 1e-3) / epsilon).
  static JumpConfig with_defaults(double alpha, double epsilon, bool symmetric = true);
  static double default_r_max(double epsilon);

  /// Throws DomainError naming the first violated invariant.
  void validate() const;

  bool operator==(const JumpConfig&) const = default;
};

/// c_alpha = alpha Gamma((1+alpha)/2) / (2^(1-alpha) sqrt(pi) Gamma(1-alpha/2)).
double stable_constant(double alpha);

/// c_alpha |z|^(-1-alpha). Throws DomainError at z == 0.
double levy_density(double z, double alpha);

/// nu_alpha([lo, hi]) for 0 < lo <= hi (one side).
double levy_mass(double alpha, double lo, double hi);

/// Integral of y nu_alpha(dy) over [lo, hi] (one side).
double levy_first_moment(double alpha, double lo, double hi);

/// nu(Y): arrival rate of the truncated jump set.
double total_intensity(const JumpConfig& cfg);

/// Integral of epsilon y nu_alpha(dy) over Y; zero for symmetric support.
double compensator_drift(const JumpConfig& cfg);

/// One standard S_alpha(1,0,0) variate (characteristic function
/// exp(-|xi|^alpha)), Chambers-Mallows-Stuck transform. alpha in (0,2].
double draw_stable(double alpha, Rng& rng);

/// n i.i.d. standard symmetric stable variates from a fresh generator.
std::vector<double> sample_stable(double alpha, std::size_t n, std::uint64_t seed);

/// Jump size y drawn from nu restricted to Y and normalized (inverse CDF).
double draw_jump_size(const JumpConfig& cfg, Rng& rng);

struct Jump {
  double size = 0.0;        // y
  double multiplier = 0.0;  // epsilon * y, always > -1
};

/// Arrivals of the Poisson random measure on Y during a window of length dt.
std::vector<Jump> sample_jumps(const JumpConfig& cfg, double dt, Rng& rng);
std::vector<Jump> sample_jumps(const JumpConfig& cfg, double dt, std::uint64_t seed);

}  // namespace allee
