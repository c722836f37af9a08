#pragma once

// Density evolution for the jump-diffusion on a uniform cell-centred grid.
//
// The forward operator discretizes
//   dp/dt = -d/dx[x (h(x) - kappa) p] + (lambda^2/2) d2/dx2[x^2 p]
//           + integral_Y [ p(x/(1+eps y))/(1+eps y) - p(x) ] nu(dy),
// where kappa is the jump compensator. Transport is first-order upwind in
// flux form, diffusion is central in flux form, and both use zero-flux
// boundary faces. The jump integral is the exact adjoint of the generator
// discretized with piecewise-linear interpolation: the mass of node j jumps
// to x_j (1 + eps y) and is shared between the two neighbouring nodes by hat
// weights. Mass landing outside the domain is lost (p = 0 outside).

#include <Eigen/Dense>

#include <ostream>
#include <vector>

#include "allee/levy.hpp"
#include "allee/model.hpp"

namespace allee {

struct Grid1D {
  double x_min = 0.0;
  double x_max = 15.0;
  int n_cells = 600;

  void validate() const;
  double spacing() const { return (x_max - x_min) / n_cells; }
  double node(int i) const { return x_min + (i + 0.5) * spacing(); }
  double face(int j) const { return x_min + j * spacing(); }
  std::vector<double> nodes() const;

  bool operator==(const Grid1D&) const = default;
};

enum class JumpQuadrature {
  kExactCells,    // closed-form integral of nu over each cell-to-cell segment
  kLogTrapezoid,  // composite trapezoid on a log-spaced y mesh per sign
};

struct JumpQuadratureOptions {
  JumpQuadrature rule = JumpQuadrature::kExactCells;
  int nodes = 256;  // mesh nodes per sign for kLogTrapezoid
};

/// Transport + diffusion part of the forward operator, assembled row by row.
Eigen::MatrixXd assemble_local_block(const ModelParams& p, double compensator, const Grid1D& grid);

/// Jump part of the forward operator: gain minus loss. Zero when epsilon = 0.
Eigen::MatrixXd assemble_jump_block(const JumpConfig& cfg, const Grid1D& grid,
                                    const JumpQuadratureOptions& quad = {});

/// Full operator A with dp/dt = A p. cfg must agree with p.alpha and p.epsilon.
/// Throws DomainError if some jump would map a node through 1 + eps y <= 0.
Eigen::MatrixXd assemble_generator_adjoint(const ModelParams& p, const JumpConfig& cfg,
                                           const Grid1D& grid,
                                           const JumpQuadratureOptions& quad = {});

/// Local (Gaussian) operator assembled independently from face fluxes, in
/// tridiagonal form.
struct Tridiagonal {
  std::vector<double> lower;  // lower[i] multiplies p[i-1] in row i (lower[0] unused)
  std::vector<double> diag;
  std::vector<double> upper;  // upper[i] multiplies p[i+1] in row i (last unused)

  void apply(const std::vector<double>& p, std::vector<double>& out) const;
  Eigen::MatrixXd to_dense() const;
};

Tridiagonal assemble_local_fpe(const ModelParams& p, const Grid1D& grid);

struct DensityField {
  Grid1D grid;
  double x0 = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> slices;  // slices[k][i] = p(x_i, times[k])
  std::vector<double> masses;
  double dt_pde = 0.0;
  double clamped_mass = 0.0;  // total mass removed by the non-negativity clamp

  std::vector<double> nodes() const { return grid.nodes(); }
};

struct FpeOptions {
  double dt_pde = 0.0;         // <= 0 selects the largest stable step
  double output_every = 0.05;  // spacing of stored slices
  JumpQuadratureOptions quadrature;
};

/// Initial density sqrt(40/pi) exp(-40 (x - x0)^2) sampled at the nodes.
std::vector<double> initial_bump(const Grid1D& grid, double x0);

/// Largest step satisfying the explicit RK2 stability and positivity bounds
/// for the given operator diagonal, transport speed and diffusion.
double stable_time_step(const ModelParams& p, double compensator, const Grid1D& grid,
                        double max_decay_rate);

/// Heun (RK2) integration of the non-local equation from the initial bump.
/// Throws InstabilityError when a slice maximum exceeds 10x the initial
/// maximum or a single step clamps more than 1e-6 of the mass.
DensityField solve_nonlocal_fpe(const ModelParams& p, const JumpConfig& cfg, const Grid1D& grid,
                                double x0, double T, const FpeOptions& opts = {});

/// Gaussian-noise equation (epsilon must be 0) with the tridiagonal operator.
DensityField solve_local_fpe(const ModelParams& p, const Grid1D& grid, double x0, double T,
                             const FpeOptions& opts = {});

/// Probability mass of each histogram bin [edges[k], edges[k+1]) from a slice,
/// treating each node as carrying the uniform density of its cell.
std::vector<double> bin_masses(const Grid1D& grid, const std::vector<double>& slice,
                               const std::vector<double>& edges);

enum class ExtremumKind { kMaximum, kMinimum, kDegenerate };

const char* to_string(ExtremumKind k);

struct StationaryExtremum {
  double x = 0.0;
  ExtremumKind kind = ExtremumKind::kMaximum;
};

/// Non-negative roots of x (h(x) - lambda^2) = 0, ascending, classified by
/// the sign of the expression's derivative (negative: density maximum).
std::vector<StationaryExtremum> stationary_extrema(const ModelParams& p, double lambda);

struct SteadyStateRow {
  double gamma3 = 0.0;
  std::vector<StationaryExtremum> extrema;
};

std::vector<SteadyStateRow> steady_state_curve(const ModelParams& p, double lambda,
                                               Interval gamma3_range, int steps,
                                               HandlingCoupling coupling);

/// Attack-rate interval on which the stationary density has two maxima
/// (0 and an upper state): the model's bistable window with s replaced by
/// s - lambda^2. hi is +inf when no fold exists; empty if s <= lambda^2.
std::optional<Interval> bistable_window(const ModelParams& p, double lambda,
                                        HandlingCoupling coupling);

/// CSV gamma3,lambda,x,kind (one row per extremum).
void write_steady_state_csv(std::ostream& os, double lambda, const std::vector<SteadyStateRow>& rows);

/// Long-format CSV t,x,p.
void write_density_csv(std::ostream& os, const DensityField& field);

/// JSON metadata: grid, x0, dt_pde, times, mass trace, clamped mass.
void write_density_json(std::ostream& os, const DensityField& field, const ModelParams& p,
                        const JumpConfig& cfg);

}  // namespace allee
