#pragma once

// Onsager-Machlup function of the stochastic model and the most probable
// transition path between two states.
//
// In Lamperti coordinates z = ln x (Gaussian noise only) the OM function is
//   OM(z', z) = ((G(z) - z') / lambda)^2 + G'(z),   G(z) = h(e^z) - lambda^2/2,
// and its Euler-Lagrange equation is z'' = (lambda^2/2) G''(z) + G'(z) G(z).

#include <ostream>
#include <vector>

#include "allee/levy.hpp"
#include "allee/model.hpp"

namespace allee {

/// Gaussian OM function in Lamperti coordinates. Throws DomainError if lambda = 0.
double om_gaussian(double z, double z_dot, const ModelParams& p);

/// Jump-diffusion OM function in the original coordinate (up to a constant):
///   (r / (lambda x))^2 + F'(x) + 2 r / (lambda^2 x) * integral eps y nu(dy),
/// with r = x' - F(x). Throws DomainError if x <= 0 or lambda = 0.
double om_jump(double x, double x_dot, const ModelParams& p, const JumpConfig& cfg);

/// Right-hand side of the Euler-Lagrange equation. Throws DomainError if lambda = 0.
double euler_lagrange_rhs(double z, const ModelParams& p);

struct ShootingOptions {
  double tolerance = 1e-6;  // terminal mismatch |z(T) - z_right|
  int max_iterations = 200;
  double blowup = 20.0;  // |z| beyond this counts as escape to +-inf
};

struct ShootingReport {
  double initial_velocity = 0.0;
  double terminal_mismatch = 0.0;
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double el_residual = 0.0;
};

struct TransitionPath {
  std::vector<double> times;
  std::vector<double> z;
  std::vector<double> z_dot;
  double z_left = 0.0;
  double z_right = 0.0;
  double action = 0.0;
  ShootingReport report;
};

/// Lamperti boundary pair for a transition from x_left to the upper stable
/// state x3. Throws DomainError if p has no x3 or x_left <= 0.
std::pair<double, double> transition_boundaries(const ModelParams& p, double x_left = 1e-3);

/// RK4 integration of the Euler-Lagrange equation on n_steps uniform steps
/// with bisection on z'(0). Throws NoBracketError when no sign change of the
/// terminal mismatch is found and NoConvergenceError after the iteration cap.
TransitionPath shoot_transition_path(const ModelParams& p, double z_left, double z_right, double T,
                                     int n_steps, const ShootingOptions& opts = {});

/// Trapezoidal integral of om_gaussian along (z, z_dot).
double action(const TransitionPath& path, const ModelParams& p);

/// Sup norm of z'' - euler_lagrange_rhs(z) at the interior nodes, with
/// fourth-order finite differences for z''. Needs at least 6 nodes.
double el_residual(const TransitionPath& path, const ModelParams& p);

/// CSV t,z,x,z_dot with x = exp(z).
void write_transition_csv(std::ostream& os, const TransitionPath& path);

/// Solver report, boundaries and action as JSON.
void write_transition_json(std::ostream& os, const TransitionPath& path, const ModelParams& p);

}  // namespace allee
