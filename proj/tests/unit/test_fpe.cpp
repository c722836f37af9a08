#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "allee/errors.hpp"
#include "allee/fpe.hpp"
#include "allee/sde.hpp"

using namespace allee;

namespace {

ModelParams jump_model() {
  ModelParams p;
  p.epsilon = 0.5;
  return p;
}

// Cell averages of a fine slice on a grid with half the cells.
std::vector<double> coarsen(const std::vector<double>& fine) {
  std::vector<double> out(fine.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
  return out;
}

double l1(const std::vector<double>& a, const std::vector<double>& b, double h) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d * h;
}

template <class F>
double bisect(F f, double lo, double hi) {
  const bool neg_lo = f(lo) < 0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((f(mid) < 0) == neg_lo ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("local operator: row assembly equals face-flux assembly") {
  ModelParams p;
  p.lambda = 0.3;
  const Grid1D grid{0.0, 15.0, 200};
  const Eigen::MatrixXd dense = assemble_local_block(p, 0.0, grid);
  const Eigen::MatrixXd tri = assemble_local_fpe(p, grid).to_dense();
  CHECK((dense - tri).cwiseAbs().maxCoeff() <= 1e-12);
  // Zero-flux faces conserve mass: columns sum to zero.
  CHECK(dense.colwise().sum().cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("jump block conserves mass for images that stay in the domain") {
  const ModelParams p = jump_model();
  const JumpConfig cfg = jump_config_for(p);
  const Grid1D grid{0.0, 15.0, 300};
  const Eigen::MatrixXd J = assemble_jump_block(cfg, grid);
  const double nu = total_intensity(cfg);
  const Eigen::RowVectorXd sums = J.colwise().sum();
  for (int j = 0; j < grid.n_cells; ++j) {
    const double x = grid.node(j);
    // Largest image is x (1 + eps r_max) < 2 x.
    if (x * (1.0 + cfg.epsilon * cfg.r_max) < grid.x_max - grid.spacing()) {
      CHECK(std::abs(sums(j)) <= 1e-10 * nu);
    } else {
      CHECK(sums(j) <= 1e-10 * nu);
    }
  }
  CHECK(std::abs(J(150, 150) + nu) <= 0.5 * nu);  // loss dominates the diagonal
  const Eigen::MatrixXd none = assemble_jump_block(jump_config_for(ModelParams{}), grid);
  CHECK(none.cwiseAbs().maxCoeff() == 0.0);

  // The trapezoid rule approximates the same operator.
  const Eigen::MatrixXd T = assemble_jump_block(cfg, grid, {JumpQuadrature::kLogTrapezoid, 256});
  Eigen::VectorXd bump(grid.n_cells);
  const auto b = initial_bump(grid, 5.0);
  for (int i = 0; i < grid.n_cells; ++i) bump(i) = b[i];
  const double h = grid.spacing();
  CHECK(((J - T) * bump).cwiseAbs().sum() * h <= 0.1 * (J * bump).cwiseAbs().sum() * h);
}

TEST_CASE("local solver conserves mass") {
  ModelParams p;
  p.lambda = 0.3;
  const Grid1D grid{0.0, 15.0, 300};
  const DensityField f = solve_local_fpe(p, grid, 5.0, 5.0);
  CHECK(std::abs(f.masses.back() - f.masses.front()) <= 1e-3);
  CHECK(f.times.size() == 101);
  CHECK(std::abs(f.times.back() - 5.0) <= 1e-12);
  CHECK(f.clamped_mass <= 1e-6);
  ModelParams jumpy = p;
  jumpy.epsilon = 0.5;
  CHECK_THROWS_AS(solve_local_fpe(jumpy, grid, 5.0, 1.0), DomainError);
}

TEST_CASE("non-local solve stays non-negative and loses mass only through the exterior") {
  const ModelParams p = jump_model();
  const Grid1D grid{0.0, 15.0, 300};
  const DensityField f = solve_nonlocal_fpe(p, jump_config_for(p), grid, 5.0, 1.0);
  int negative = 0;
  for (const auto& s : f.slices)
    for (double v : s) negative += v < 0.0;
  CHECK(negative == 0);
  for (std::size_t k = 1; k < f.masses.size(); ++k) CHECK(f.masses[k] <= f.masses[k - 1] + 1e-12);
  CHECK(f.masses.back() > 0.9);
  CHECK_THROWS_AS(solve_nonlocal_fpe(p, jump_config_for(p), grid, 5.0, 1.0, {1.0, 0.05, {}}), DomainError);
  CHECK_THROWS_AS(solve_nonlocal_fpe(p, jump_config_for(p), grid, 15.5, 1.0), DomainError);
}

TEST_CASE("non-local density agrees with Monte Carlo") {
  const ModelParams p = jump_model();
  const JumpConfig cfg = jump_config_for(p);
  const Grid1D grid{0.0, 15.0, 600};
  const DensityField f = solve_nonlocal_fpe(p, cfg, grid, 5.0, 1.0);
  // Monte Carlo from the same initial bump: x0 ~ N(5, 1/80).
  const std::size_t n = 4000;
  std::vector<double> terminal(n);
  Rng rng(123);
  std::normal_distribution<double> start(5.0, std::sqrt(1.0 / 80.0));
  for (std::size_t i = 0; i < n; ++i)
    terminal[i] = simulate_path(p, cfg, start(rng), 1.0, 0.001, derive_seed(77, i)).states.back();
  const HistogramSpec spec{0.0, 15.0, 60};
  const auto mc = make_histogram(terminal, spec).masses();
  const auto pde = bin_masses(grid, f.slices.back(), spec.edges());
  double d = 0.0;
  for (std::size_t k = 0; k < mc.size(); ++k) d += std::abs(mc[k] - pde[k]);
  CHECK(d <= 0.15);
}

TEST_CASE("grid refinement reduces the self-distance") {
  const ModelParams p = jump_model();
  const JumpConfig cfg = jump_config_for(p);
  std::vector<std::vector<double>> sols;
  for (int n : {150, 300, 600})
    sols.push_back(solve_nonlocal_fpe(p, cfg, {0.0, 15.0, n}, 5.0, 1.0).slices.back());
  const double d1 = l1(sols[0], coarsen(sols[1]), 15.0 / 150);
  const double d2 = l1(coarsen(sols[1]), coarsen(coarsen(sols[2])), 15.0 / 150);
  CHECK(d1 / d2 >= 1.5);
}

TEST_CASE("bin masses cover the slice mass") {
  const Grid1D grid{0.0, 15.0, 300};
  const auto bump = initial_bump(grid, 5.0);
  const auto m = bin_masses(grid, bump, HistogramSpec{0.0, 15.0, 60}.edges());
  double total = 0.0;
  for (double v : m) total += v;
  CHECK(std::abs(total - 1.0) <= 1e-6);
}

TEST_CASE("stationary extrema") {
  const ModelParams p;  // unit handling time
  const Equilibria eq = equilibria(p);
  const auto e0 = stationary_extrema(p, 0.0);
  REQUIRE(e0.size() == 3);
  CHECK(e0[0].x == 0.0);
  CHECK(std::abs(e0[1].x - *eq.x2) <= 1e-10);
  CHECK(std::abs(e0[2].x - *eq.x3) <= 1e-10);
  CHECK(e0[0].kind == ExtremumKind::kMaximum);
  CHECK(e0[1].kind == ExtremumKind::kMinimum);
  CHECK(e0[2].kind == ExtremumKind::kMaximum);

  const double lam = 0.3;
  auto reduced = [&](double x) { return per_capita_growth(x, p) - lam * lam; };
  std::vector<double> roots;
  for (int i = 0; i < 15000; ++i) {
    const double a = 1e-3 * i + 1e-9, b = 1e-3 * (i + 1);
    if ((reduced(a) < 0) != (reduced(b) < 0)) roots.push_back(bisect(reduced, a, b));
  }
  const auto e3 = stationary_extrema(p, lam);
  REQUIRE(e3.size() == roots.size() + 1);
  for (std::size_t i = 0; i < roots.size(); ++i) CHECK(std::abs(e3[i + 1].x - roots[i]) <= 1e-9);

  // lambda^2 > s: only extinction survives.
  const auto big = stationary_extrema(p, 1.1);
  REQUIRE(big.size() == 1);
  CHECK(big[0].x == 0.0);
}

TEST_CASE("steady-state curve and bistable window") {
  ModelParams p;
  p.gamma4 = 1.0 / p.gamma3;
  const auto coupling = HandlingCoupling::kFixedProduct;
  const auto rows = steady_state_curve(p, 0.0, {0.5, 4.0}, 36, coupling);
  const BranchTable scan = bifurcation_scan(p, {0.5, 4.0}, 36, coupling);
  REQUIRE(rows.size() == scan.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& eq = scan.rows[i].eq;
    std::vector<double> expected = {0.0};
    if (eq.x2) expected.push_back(*eq.x2);
    if (eq.x4) expected.push_back(*eq.x4);
    if (eq.x3) expected.push_back(*eq.x3);
    REQUIRE(rows[i].extrema.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(rows[i].extrema[k].x == expected[k]);
  }

  const auto w0 = bistable_window(p, 0.0, coupling);
  const auto w3 = bistable_window(p, 0.3, coupling);
  REQUIRE(w0);
  REQUIRE(w3);
  CHECK(std::abs(w0->hi - 3.025) <= 1e-10);
  // Fold of the shifted quadratic: s' + (s' - g2)^2 / (4 g2), s' = 0.91.
  CHECK(std::abs(w3->hi - (0.91 + 0.81 * 0.81 / 0.4)) <= 1e-10);
  CHECK(w3->hi - w3->lo < w0->hi - w0->lo);
  CHECK_FALSE(bistable_window(p, 1.0, coupling));

  // Above the upper fold only extinction remains.
  const auto above = steady_state_curve(p, 0.3, {3.0, 3.5}, 2, coupling);
  CHECK(above.back().extrema.size() == 1);

  std::ostringstream os;
  write_steady_state_csv(os, 0.3, above);
  CHECK(os.str().rfind("gamma3,lambda,x,kind\n", 0) == 0);
}
