#include "allee/mppp.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include "json.hpp"

#include "allee/errors.hpp"
#include "allee/parallel.hpp"

namespace allee {

int count_modes(const std::vector<double>& slice, double prominence) {
  const std::size_t n = slice.size();
  if (n == 0) return 0;
  const double top = *std::max_element(slice.begin(), slice.end());
  if (!(top > 0.0)) return 0;
  const double floor = prominence * top;
  if (n == 1) return 1;

  int modes = 0;
  std::size_t i = 0;
  while (i < n) {
    // Extent of the plateau starting at i.
    std::size_t j = i;
    while (j + 1 < n && slice[j + 1] == slice[i]) ++j;
    const bool left_ok = i == 0 || slice[i - 1] < slice[i];
    const bool right_ok = j + 1 == n || slice[j + 1] < slice[i];
    if (left_ok && right_ok && slice[i] > floor) ++modes;
    i = j + 1;
  }
  return modes;
}

double refined_argmax(const Grid1D& grid, const std::vector<double>& slice) {
  const auto it = std::max_element(slice.begin(), slice.end());
  const auto k = static_cast<int>(it - slice.begin());
  const double x = grid.node(k);
  if (k == 0 || k + 1 == static_cast<int>(slice.size())) return x;
  const double fm = slice[static_cast<std::size_t>(k - 1)];
  const double f0 = slice[static_cast<std::size_t>(k)];
  const double fp = slice[static_cast<std::size_t>(k + 1)];
  const double curv = fm - 2.0 * f0 + fp;
  if (!(curv < 0.0)) return x;
  const double shift = std::clamp(0.5 * (fm - fp) / curv, -1.0, 1.0);
  return x + shift * grid.spacing();
}

MpppResult most_probable_orbit(const DensityField& field, const MpppOptions& opts) {
  if (field.slices.size() < 2 || field.times.size() != field.slices.size())
    throw DomainError("most_probable_orbit: need at least two time slices");
  MpppResult r;
  r.x0 = field.x0;
  r.times = field.times;
  r.orbit.reserve(field.slices.size());
  r.mode_counts.reserve(field.slices.size());
  for (std::size_t k = 0; k < field.slices.size(); ++k) {
    const auto& slice = field.slices[k];
    if (std::none_of(slice.begin(), slice.end(), [](double v) { return v > 0.0; }))
      throw DomainError(fmt::format("most_probable_orbit: slice at t = {} is identically zero",
                                    field.times[k]));
    r.orbit.push_back(refined_argmax(field.grid, slice));
    r.mode_counts.push_back(count_modes(slice, opts.prominence));
  }
  for (std::size_t k = 1; k < r.mode_counts.size(); ++k)
    if (r.mode_counts[k] != r.mode_counts[k - 1])
      r.bifurcation_times.push_back(0.5 * (r.times[k - 1] + r.times[k]));
  r.x_m_terminal = r.orbit.back();
  return r;
}

std::vector<MpppResult> orbit_family(const ModelParams& p, const JumpConfig& cfg,
                                     const Grid1D& grid, const std::vector<double>& x0_list,
                                     double T, const FpeOptions& fpe, const MpppOptions& opts) {
  for (double x0 : x0_list)
    if (!(x0 > grid.x_min && x0 < grid.x_max))
      throw DomainError(fmt::format("orbit_family: x0 = {} outside the grid interior", x0));
  std::vector<MpppResult> out(x0_list.size());
  parallel_for(x0_list.size(), [&](std::size_t i) {
    out[i] = most_probable_orbit(solve_nonlocal_fpe(p, cfg, grid, x0_list[i], T, fpe), opts);
  });
  return out;
}

void write_mppp_csv(std::ostream& os, const MpppResult& r) {
  os << "t,x_m,mode_count\n";
  for (std::size_t k = 0; k < r.times.size(); ++k)
    os << fmt::format("{:.10g},{:.10g},{}\n", r.times[k], r.orbit[k], r.mode_counts[k]);
}

void write_mppp_events_json(std::ostream& os, const MpppResult& r) {
  nlohmann::ordered_json j;
  j["x0"] = r.x0;
  j["bifurcation_times"] = r.bifurcation_times;
  j["x_m_terminal"] = r.x_m_terminal;
  os << j.dump(2) << '\n';
}

}  // namespace allee
