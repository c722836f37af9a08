#include "doctest.h"

#include <cmath>
#include <sstream>

#include "allee/errors.hpp"
#include "allee/mppp.hpp"
#include "allee/sde.hpp"

using namespace allee;

namespace {

std::vector<double> bumps(const Grid1D& grid, std::vector<std::pair<double, double>> centers_heights) {
  std::vector<double> out(static_cast<std::size_t>(grid.n_cells), 0.0);
  for (int i = 0; i < grid.n_cells; ++i)
    for (auto [c, a] : centers_heights) out[i] += a * std::exp(-40.0 * (grid.node(i) - c) * (grid.node(i) - c));
  return out;
}

// RK4 solution of x' = F(x) at time T.
double ode_flow(const ModelParams& p, double x, double T) {
  const int n = 20000;
  const double dt = T / n;
  for (int i = 0; i < n; ++i) {
    const double k1 = drift(x, p), k2 = drift(x + 0.5 * dt * k1, p);
    const double k3 = drift(x + 0.5 * dt * k2, p), k4 = drift(x + dt * k3, p);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

}  // namespace

TEST_CASE("mode counting") {
  const Grid1D grid{0.0, 15.0, 600};
  CHECK(count_modes(bumps(grid, {{5.0, 1.0}})) == 1);
  CHECK(count_modes(bumps(grid, {{3.0, 1.0}, {9.0, 0.8}})) == 2);
  CHECK(count_modes(bumps(grid, {{3.0, 1.0}, {9.0, 0.005}}), 0.01) == 1);
  CHECK(count_modes(bumps(grid, {{3.0, 1.0}, {9.0, 0.005}}), 0.001) == 2);
  CHECK(count_modes({0.0, 0.0, 0.0}) == 0);
  CHECK(count_modes({2.0, 1.0, 1.0, 3.0}) == 2);  // both ends
  CHECK(count_modes({1.0, 2.0, 2.0, 1.0}) == 1);  // plateau counts once
}

TEST_CASE("refined argmax stays within one cell of the discrete argmax") {
  const Grid1D grid{0.0, 15.0, 600};
  for (double c : {4.0, 4.01, 4.0125, 7.333}) {
    const auto s = bumps(grid, {{c, 1.0}});
    const double x = refined_argmax(grid, s);
    const auto k = std::max_element(s.begin(), s.end()) - s.begin();
    CHECK(std::abs(x - grid.node(static_cast<int>(k))) <= grid.spacing());
    CHECK(std::abs(x - c) <= 0.05 * grid.spacing());
  }
}

TEST_CASE("orbit of the noiseless local solve follows the deterministic flow") {
  ModelParams p;  // lambda = epsilon = 0
  const Grid1D grid{0.0, 15.0, 600};
  for (double x0 : {3.5, 12.0}) {
    const DensityField f = solve_local_fpe(p, grid, x0, 5.0);
    const MpppResult r = most_probable_orbit(f);
    CHECK(std::abs(r.orbit.front() - x0) <= grid.spacing());
    double worst = 0.0;
    for (std::size_t k = 0; k < r.times.size(); ++k)
      worst = std::max(worst, std::abs(r.orbit[k] - ode_flow(p, x0, r.times[k])));
    CHECK(worst <= 2.0 * grid.spacing());
  }
}

TEST_CASE("bifurcation times and oversampling") {
  ModelParams p;
  p.epsilon = 0.5;
  const JumpConfig cfg = jump_config_for(p);
  const Grid1D grid{0.0, 15.0, 600};
  const DensityField f = solve_nonlocal_fpe(p, cfg, grid, 5.0, 2.0);
  const MpppResult r = most_probable_orbit(f);
  CHECK(r.times.size() == r.orbit.size());
  CHECK(r.mode_counts.front() == 1);
  for (int c : r.mode_counts) CHECK(c >= 1);
  for (double x : r.orbit) CHECK((x >= grid.x_min && x <= grid.x_max));
  REQUIRE_FALSE(r.bifurcation_times.empty());

  // Insert the average of each adjacent slice pair.
  DensityField fine = f;
  fine.times.clear();
  fine.slices.clear();
  for (std::size_t k = 0; k < f.slices.size(); ++k) {
    if (k > 0) {
      std::vector<double> mid(f.slices[k].size());
      for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (f.slices[k][i] + f.slices[k - 1][i]);
      fine.times.push_back(0.5 * (f.times[k] + f.times[k - 1]));
      fine.slices.push_back(mid);
    }
    fine.times.push_back(f.times[k]);
    fine.slices.push_back(f.slices[k]);
  }
  const MpppResult rf = most_probable_orbit(fine);
  REQUIRE(rf.bifurcation_times.size() == r.bifurcation_times.size());
  const double spacing = f.times[1] - f.times[0];
  for (std::size_t i = 0; i < r.bifurcation_times.size(); ++i)
    CHECK(std::abs(rf.bifurcation_times[i] - r.bifurcation_times[i]) <= 0.5 * spacing);

  std::ostringstream csv, js;
  write_mppp_csv(csv, r);
  write_mppp_events_json(js, r);
  CHECK(csv.str().rfind("t,x_m,mode_count\n", 0) == 0);
  CHECK(js.str().find("\"x_m_terminal\"") != std::string::npos);
}

TEST_CASE("degenerate input") {
  DensityField f;
  f.grid = {0.0, 15.0, 16};
  f.times = {0.0};
  f.slices = {std::vector<double>(16, 1.0)};
  CHECK_THROWS_AS(most_probable_orbit(f), DomainError);
  f.times = {0.0, 0.1};
  f.slices.push_back(std::vector<double>(16, 0.0));
  CHECK_THROWS_AS(most_probable_orbit(f), DomainError);
}

TEST_CASE("orbit family shares its terminal state") {
  ModelParams p;
  p.epsilon = 0.5;
  const Grid1D grid{0.0, 15.0, 300};
  const auto fam = orbit_family(p, jump_config_for(p), grid, {0.35, 5.0, 12.0}, 4.0);
  REQUIRE(fam.size() == 3);
  CHECK(std::abs(fam[0].orbit.front() - 0.35) <= grid.spacing());
  for (const auto& r : fam) CHECK(std::abs(r.x_m_terminal - fam[0].x_m_terminal) <= 2.0 * grid.spacing());
  CHECK_THROWS_AS(orbit_family(p, jump_config_for(p), grid, {15.0}, 1.0), DomainError);
}
