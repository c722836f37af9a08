#pragma once

// Most probable phase portrait: the per-slice argmax X_m(t) of a density
// field, the number of density maxima per slice and the times at which that
// number changes.

#include <ostream>
#include <vector>

#include "allee/fpe.hpp"

namespace allee {

struct MpppOptions {
  double prominence = 0.01;  // maxima below this fraction of the slice max are ignored
};

struct MpppResult {
  double x0 = 0.0;
  std::vector<double> times;
  std::vector<double> orbit;  // X_m(t)
  std::vector<int> mode_counts;
  std::vector<double> bifurcation_times;
  double x_m_terminal = 0.0;
};

/// Local maxima of a non-negative slice whose height exceeds
/// prominence * max. Plateaus count once. An end node counts when it exceeds
/// its single neighbour, so mass piled against a boundary is a mode.
int count_modes(const std::vector<double>& slice, double prominence = 0.01);

/// Argmax of slice on grid, refined by a 3-point parabola through the
/// discrete maximum and its neighbours (clipped to one cell).
double refined_argmax(const Grid1D& grid, const std::vector<double>& slice);

/// Throws DomainError on fewer than two slices or an identically zero slice.
MpppResult most_probable_orbit(const DensityField& field, const MpppOptions& opts = {});

/// One non-local solve and MPPP per initial state, in parallel.
std::vector<MpppResult> orbit_family(const ModelParams& p, const JumpConfig& cfg,
                                     const Grid1D& grid, const std::vector<double>& x0_list,
                                     double T, const FpeOptions& fpe = {},
                                     const MpppOptions& opts = {});

/// CSV t,x_m,mode_count.
void write_mppp_csv(std::ostream& os, const MpppResult& r);

/// {"bifurcation_times":[...], "x_m_terminal":...}
void write_mppp_events_json(std::ostream& os, const MpppResult& r);

}  // namespace allee
