#include "allee/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include "json.hpp"

#include "allee/errors.hpp"

namespace allee {

void Grid1D::validate() const {
  if (!(std::isfinite(x_min) && x_min >= 0.0)) throw DomainError("grid.x_min must be >= 0");
  if (!(std::isfinite(x_max) && x_max > x_min)) throw DomainError("grid.x_max must exceed grid.x_min");
  if (n_cells < 16) throw DomainError("grid.n_cells must be >= 16");
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> out(static_cast<std::size_t>(n_cells));
  for (int i = 0; i < n_cells; ++i) out[static_cast<std::size_t>(i)] = node(i);
  return out;
}

namespace {

// Transport velocity x (h(x) - kappa) evaluated at face j.
double face_velocity(const ModelParams& p, double compensator, const Grid1D& grid, int j) {
  const double x = grid.face(j);
  return x * (per_capita_growth(x, p) - compensator);
}

// Closed-form pieces of nu_alpha on [a, b], 0 < a <= b.
struct LevyMoments {
  double alpha;
  double c;

  double mass(double a, double b) const {
    return c * (std::pow(a, -alpha) - std::pow(b, -alpha)) / alpha;
  }
  double first(double a, double b) const {
    if (alpha == 1.0) return c * std::log(b / a);
    return c * (std::pow(a, 1.0 - alpha) - std::pow(b, 1.0 - alpha)) / (alpha - 1.0);
  }
};

// Shares `weight` arriving at position z between the nodes around z:
// piecewise-linear between nodes, the whole weight to the edge node inside the
// half cells at either end, nothing outside [x_min, x_max).
class Depositor {
 public:
  Depositor(const Grid1D& grid, Eigen::MatrixXd& A) : grid_(grid), A_(A), h_(grid.spacing()) {}

  void point(int column, double z, double weight) {
    const int n = grid_.n_cells;
    if (z < grid_.x_min || z >= grid_.x_max) return;
    const double pos = (z - grid_.x_min) / h_ - 0.5;
    if (pos <= 0.0) {
      A_(0, column) += weight;
      return;
    }
    if (pos >= n - 1) {
      A_(n - 1, column) += weight;
      return;
    }
    const int i = static_cast<int>(pos);
    const double frac = pos - i;
    A_(i, column) += weight * (1.0 - frac);
    A_(i + 1, column) += weight * frac;
  }

  // Deposit total `mass` spread over z in [za, zb] within one segment whose
  // mass-weighted mean position is z_mean. Segment index k: 0 is the left
  // half cell, n the right half cell, otherwise between nodes k-1 and k.
  void segment(int column, int k, double mass, double z_mean) {
    const int n = grid_.n_cells;
    if (k == 0) {
      A_(0, column) += mass;
      return;
    }
    if (k == n) {
      A_(n - 1, column) += mass;
      return;
    }
    const double frac = std::clamp((z_mean - grid_.node(k - 1)) / h_, 0.0, 1.0);
    A_(k - 1, column) += mass * (1.0 - frac);
    A_(k, column) += mass * frac;
  }

 private:
  const Grid1D& grid_;
  Eigen::MatrixXd& A_;
  double h_;
};

// Breakpoint k of the deposit segments: x_min, x_0, ..., x_{n-1}, x_max.
double breakpoint(const Grid1D& grid, int k) {
  if (k == 0) return grid.x_min;
  if (k == grid.n_cells + 1) return grid.x_max;
  return grid.node(k - 1);
}

// Index of the segment containing z (clamped to [0, n]).
int segment_of(const Grid1D& grid, double z) {
  const double pos = (z - grid.x_min) / grid.spacing() - 0.5;
  if (pos < 0.0) return 0;
  return std::min(static_cast<int>(pos) + 1, grid.n_cells);
}

void deposit_exact(const JumpConfig& cfg, const Grid1D& grid, Eigen::MatrixXd& A) {
  const LevyMoments nu{cfg.alpha, stable_constant(cfg.alpha)};
  Depositor dep(grid, A);
  const int n = grid.n_cells;
  const double one_side = nu.mass(cfg.delta, cfg.r_max);
  const double loss = cfg.symmetric ? 2.0 * one_side : one_side;
  const int signs = cfg.symmetric ? 2 : 1;

  for (int j = 0; j < n; ++j) {
    const double x = grid.node(j);
    A(j, j) -= loss;
    for (int s = 0; s < signs; ++s) {
      const double sigma = s == 0 ? 1.0 : -1.0;
      const double slope = sigma * cfg.epsilon * x;  // dz/dy
      const double z_delta = x + slope * cfg.delta;
      const double z_rmax = x + slope * cfg.r_max;
      const double z_lo = std::max(std::min(z_delta, z_rmax), grid.x_min);
      const double z_hi = std::min(std::max(z_delta, z_rmax), grid.x_max);
      if (!(z_hi > z_lo)) continue;
      auto y_of = [&](double z) { return std::clamp((z - x) / slope, cfg.delta, cfg.r_max); };
      for (int k = segment_of(grid, z_lo); k <= n; ++k) {
        const double za = std::max(breakpoint(grid, k), z_lo);
        const double zb = std::min(breakpoint(grid, k + 1), z_hi);
        if (za >= z_hi) break;
        if (!(zb > za)) continue;
        double ya = y_of(za);
        double yb = y_of(zb);
        if (ya > yb) std::swap(ya, yb);
        if (!(yb > ya)) continue;
        const double mass = nu.mass(ya, yb);
        const double z_mean = x + slope * nu.first(ya, yb) / mass;
        dep.segment(j, k, mass, z_mean);
      }
    }
  }
}

void deposit_trapezoid(const JumpConfig& cfg, const Grid1D& grid, int nodes, Eigen::MatrixXd& A) {
  if (nodes < 2) throw DomainError("jump quadrature needs at least 2 nodes");
  const double c = stable_constant(cfg.alpha);
  std::vector<double> y(static_cast<std::size_t>(nodes));
  std::vector<double> w(static_cast<std::size_t>(nodes), 0.0);
  const double ratio = std::log(cfg.r_max / cfg.delta);
  for (int k = 0; k < nodes; ++k)
    y[static_cast<std::size_t>(k)] = cfg.delta * std::exp(ratio * k / (nodes - 1));
  y.back() = cfg.r_max;
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    const double half = 0.5 * (y[k + 1] - y[k]);
    w[k] += half;
    w[k + 1] += half;
  }
  double quad_mass = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    w[k] *= c * std::pow(y[k], -1.0 - cfg.alpha);
    quad_mass += w[k];
  }
  const int signs = cfg.symmetric ? 2 : 1;
  Depositor dep(grid, A);
  for (int j = 0; j < grid.n_cells; ++j) {
    const double x = grid.node(j);
    A(j, j) -= signs * quad_mass;
    for (int s = 0; s < signs; ++s) {
      const double sigma = s == 0 ? 1.0 : -1.0;
      for (std::size_t k = 0; k < y.size(); ++k) dep.point(j, x * (1.0 + sigma * cfg.epsilon * y[k]), w[k]);
    }
  }
}

struct RunPlan {
  double dt = 0.0;
  std::vector<double> output_times;
  std::vector<int> substeps;  // RK2 steps between consecutive outputs
};

RunPlan plan_run(double T, double output_every, double dt_max) {
  if (!(T > 0.0)) throw DomainError("T must be > 0");
  if (!(output_every > 0.0)) throw DomainError("output_every must be > 0");
  RunPlan plan;
  plan.output_times.push_back(0.0);
  const auto full = static_cast<int>(std::floor(T / output_every + 1e-9));
  for (int k = 1; k <= full; ++k) plan.output_times.push_back(std::min(k * output_every, T));
  if (T - plan.output_times.back() > 1e-9 * T) plan.output_times.push_back(T);
  plan.output_times.back() = T;
  const auto per_slice = static_cast<int>(std::ceil(output_every / dt_max - 1e-9));
  plan.dt = output_every / per_slice;
  for (std::size_t k = 1; k < plan.output_times.size(); ++k) {
    const double span = plan.output_times[k] - plan.output_times[k - 1];
    plan.substeps.push_back(std::max(1, static_cast<int>(std::ceil(span / plan.dt - 1e-9))));
  }
  return plan;
}

double mass_of(const std::vector<double>& p, double h) {
  double m = 0.0;
  for (double v : p) m += v;
  return m * h;
}

// Heun integration of dp/dt = A p where apply(p, out) computes A p.
template <class Apply>
DensityField integrate(const Grid1D& grid, double x0, double T, double dt_max, const FpeOptions& opts,
                       Apply apply) {
  const RunPlan plan = plan_run(T, opts.output_every, dt_max);
  const double h = grid.spacing();
  const auto n = static_cast<std::size_t>(grid.n_cells);

  DensityField field;
  field.grid = grid;
  field.x0 = x0;
  field.dt_pde = plan.dt;
  std::vector<double> p = initial_bump(grid, x0);
  const double initial_max = *std::max_element(p.begin(), p.end());
  field.times.push_back(0.0);
  field.slices.push_back(p);
  field.masses.push_back(mass_of(p, h));

  std::vector<double> k1(n), stage(n), k2(n);
  for (std::size_t s = 0; s < plan.substeps.size(); ++s) {
    const double span = plan.output_times[s + 1] - plan.output_times[s];
    const int steps = plan.substeps[s];
    const double dt = span / steps;
    for (int step = 0; step < steps; ++step) {
      apply(p, k1);
      for (std::size_t i = 0; i < n; ++i) stage[i] = p[i] + dt * k1[i];
      apply(stage, k2);
      double clamped = 0.0;
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.5 * (p[i] + stage[i] + dt * k2[i]);
        if (v < 0.0) {
          clamped -= v;
          v = 0.0;
        }
        p[i] = v;
        total += v;
      }
      clamped *= h;
      total *= h;
      field.clamped_mass += clamped;
      if (clamped > 1e-6 * std::max(total, std::numeric_limits<double>::min()))
        throw InstabilityError(fmt::format("fpe: clamped mass {} exceeds 1e-6 of total {} at t = {}",
                                           clamped, total, plan.output_times[s] + (step + 1) * dt));
    }
    const double slice_max = *std::max_element(p.begin(), p.end());
    if (!(slice_max <= 10.0 * initial_max))
      throw InstabilityError(fmt::format("fpe: density max {} exceeds 10x the initial max {} at t = {}",
                                         slice_max, initial_max, plan.output_times[s + 1]));
    field.times.push_back(plan.output_times[s + 1]);
    field.slices.push_back(p);
    field.masses.push_back(mass_of(p, h));
  }
  return field;
}

void check_start(const Grid1D& grid, double x0) {
  grid.validate();
  if (!(x0 > grid.node(0) && x0 < grid.node(grid.n_cells - 1)))
    throw DomainError(fmt::format("x0 = {} must lie inside the grid interior", x0));
}

double choose_dt(double requested, double bound) {
  if (requested <= 0.0) return bound;
  if (requested > bound)
    throw DomainError(fmt::format("dt_pde = {} exceeds the stability bound {}", requested, bound));
  return requested;
}

}  // namespace

Eigen::MatrixXd assemble_local_block(const ModelParams& p, double compensator, const Grid1D& grid) {
  grid.validate();
  const int n = grid.n_cells;
  const double h = grid.spacing();
  const double diff = 0.5 * p.lambda * p.lambda / (h * h);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    // Left face i (skipped at the boundary), right face i+1.
    if (i > 0) {
      const double v = face_velocity(p, compensator, grid, i);
      if (v > 0.0)
        A(i, i - 1) += v / h;
      else
        A(i, i) += v / h;
      const double xl = grid.node(i - 1);
      const double xi = grid.node(i);
      A(i, i - 1) += diff * xl * xl;
      A(i, i) -= diff * xi * xi;
    }
    if (i < n - 1) {
      const double v = face_velocity(p, compensator, grid, i + 1);
      if (v > 0.0)
        A(i, i) -= v / h;
      else
        A(i, i + 1) -= v / h;
      const double xr = grid.node(i + 1);
      const double xi = grid.node(i);
      A(i, i + 1) += diff * xr * xr;
      A(i, i) -= diff * xi * xi;
    }
  }
  return A;
}

Eigen::MatrixXd assemble_jump_block(const JumpConfig& cfg, const Grid1D& grid,
                                    const JumpQuadratureOptions& quad) {
  grid.validate();
  cfg.validate();
  const int n = grid.n_cells;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  if (cfg.epsilon == 0.0) return A;
  if (cfg.symmetric && !(1.0 - cfg.epsilon * cfg.r_max > 0.0))
    throw DomainError("jump block: some jump maps a node through 1 + eps y <= 0");
  if (quad.rule == JumpQuadrature::kExactCells)
    deposit_exact(cfg, grid, A);
  else
    deposit_trapezoid(cfg, grid, quad.nodes, A);
  return A;
}

Eigen::MatrixXd assemble_generator_adjoint(const ModelParams& p, const JumpConfig& cfg,
                                           const Grid1D& grid, const JumpQuadratureOptions& quad) {
  p.validate();
  cfg.validate();
  if (cfg.epsilon != p.epsilon || cfg.alpha != p.alpha)
    throw DomainError("jump config must carry the same alpha and epsilon as the model");
  const double kappa = cfg.epsilon > 0.0 ? compensator_drift(cfg) : 0.0;
  Eigen::MatrixXd A = assemble_local_block(p, kappa, grid);
  A += assemble_jump_block(cfg, grid, quad);
  return A;
}

void Tridiagonal::apply(const std::vector<double>& p, std::vector<double>& out) const {
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * p[i];
    if (i > 0) v += lower[i] * p[i - 1];
    if (i + 1 < n) v += upper[i] * p[i + 1];
    out[i] = v;
  }
}

Eigen::MatrixXd Tridiagonal::to_dense() const {
  const auto n = static_cast<Eigen::Index>(diag.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    A(i, i) = diag[k];
    if (i > 0) A(i, i - 1) = lower[k];
    if (i + 1 < n) A(i, i + 1) = upper[k];
  }
  return A;
}

Tridiagonal assemble_local_fpe(const ModelParams& p, const Grid1D& grid) {
  grid.validate();
  const auto n = static_cast<std::size_t>(grid.n_cells);
  const double h = grid.spacing();
  const double half_var = 0.5 * p.lambda * p.lambda;
  Tridiagonal T;
  T.lower.assign(n, 0.0);
  T.diag.assign(n, 0.0);
  T.upper.assign(n, 0.0);

  // Interior face j separates cells L = j-1 and R = j. A flux f to the right
  // removes f/h from L and adds f/h to R. Boundary faces carry no flux.
  for (std::size_t j = 1; j < n; ++j) {
    const std::size_t L = j - 1;
    const std::size_t R = j;
    const double xf = grid.face(static_cast<int>(j));
    const double v = xf * per_capita_growth(xf, p);
    // advective flux v * p_upwind
    if (v > 0.0) {
      T.diag[L] -= v / h;
      T.lower[R] += v / h;
    } else {
      T.upper[L] -= v / h;
      T.diag[R] += v / h;
    }
    // diffusive flux -(q_R - q_L)/h with q = (lambda^2/2) x^2 p
    const double cl = half_var * grid.node(static_cast<int>(L)) * grid.node(static_cast<int>(L)) / (h * h);
    const double cr = half_var * grid.node(static_cast<int>(R)) * grid.node(static_cast<int>(R)) / (h * h);
    T.upper[L] += cr;
    T.diag[L] -= cl;
    T.diag[R] -= cr;
    T.lower[R] += cl;
  }
  return T;
}

std::vector<double> initial_bump(const Grid1D& grid, double x0) {
  const double amp = std::sqrt(40.0 / std::numbers::pi);
  std::vector<double> p(static_cast<std::size_t>(grid.n_cells));
  for (int i = 0; i < grid.n_cells; ++i) {
    const double d = grid.node(i) - x0;
    p[static_cast<std::size_t>(i)] = amp * std::exp(-40.0 * d * d);
  }
  return p;
}

double stable_time_step(const ModelParams& p, double compensator, const Grid1D& grid,
                        double max_decay_rate) {
  const double h = grid.spacing();
  double vmax = 0.0;
  for (int j = 0; j <= grid.n_cells; ++j)
    vmax = std::max(vmax, std::abs(face_velocity(p, compensator, grid, j)));
  double dt = std::numeric_limits<double>::infinity();
  if (vmax > 0.0) dt = std::min(dt, 0.4 * h / vmax);
  dt = std::min(dt, 0.4 * h * h / (p.lambda * p.lambda * grid.x_max * grid.x_max + 1e-12));
  if (max_decay_rate > 0.0) dt = std::min(dt, 0.9 / max_decay_rate);
  return dt;
}

DensityField solve_nonlocal_fpe(const ModelParams& p, const JumpConfig& cfg, const Grid1D& grid,
                                double x0, double T, const FpeOptions& opts) {
  check_start(grid, x0);
  const Eigen::MatrixXd A = assemble_generator_adjoint(p, cfg, grid, opts.quadrature);
  const double kappa = cfg.epsilon > 0.0 ? compensator_drift(cfg) : 0.0;
  const double decay = (-A.diagonal()).maxCoeff();
  const double dt_max = choose_dt(opts.dt_pde, stable_time_step(p, kappa, grid, decay));
  const auto n = static_cast<Eigen::Index>(grid.n_cells);
  return integrate(grid, x0, T, dt_max, opts, [&](const std::vector<double>& in, std::vector<double>& out) {
    Eigen::Map<const Eigen::VectorXd> pin(in.data(), n);
    Eigen::Map<Eigen::VectorXd> pout(out.data(), n);
    pout.noalias() = A * pin;
  });
}

DensityField solve_local_fpe(const ModelParams& p, const Grid1D& grid, double x0, double T,
                             const FpeOptions& opts) {
  p.validate();
  if (p.epsilon != 0.0) throw DomainError("solve_local_fpe: epsilon must be 0");
  check_start(grid, x0);
  const Tridiagonal op = assemble_local_fpe(p, grid);
  double decay = 0.0;
  for (double d : op.diag) decay = std::max(decay, -d);
  const double dt_max = choose_dt(opts.dt_pde, stable_time_step(p, 0.0, grid, decay));
  return integrate(grid, x0, T, dt_max, opts,
                   [&](const std::vector<double>& in, std::vector<double>& out) { op.apply(in, out); });
}

std::vector<double> bin_masses(const Grid1D& grid, const std::vector<double>& slice,
                               const std::vector<double>& edges) {
  std::vector<double> out(edges.size() > 0 ? edges.size() - 1 : 0, 0.0);
  for (int i = 0; i < grid.n_cells; ++i) {
    const double a = grid.face(i);
    const double b = grid.face(i + 1);
    const double density = slice[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double overlap = std::min(b, edges[k + 1]) - std::max(a, edges[k]);
      if (overlap > 0.0) out[k] += density * overlap;
    }
  }
  return out;
}

const char* to_string(ExtremumKind k) {
  switch (k) {
    case ExtremumKind::kMaximum: return "maximum";
    case ExtremumKind::kMinimum: return "minimum";
    case ExtremumKind::kDegenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

// The stationary-extremum condition x (h(x) - lambda^2) = 0 is the
// equilibrium condition of the model with s shifted to s - lambda^2.
ModelParams shifted(const ModelParams& p, double lambda) {
  ModelParams q = p;
  q.s = p.s - lambda * lambda;
  q.lambda = 0.0;
  return q;
}

ExtremumKind kind_of(double slope) {
  if (slope < 0.0) return ExtremumKind::kMaximum;
  if (slope > 0.0) return ExtremumKind::kMinimum;
  return ExtremumKind::kDegenerate;
}

}  // namespace

std::vector<StationaryExtremum> stationary_extrema(const ModelParams& p, double lambda) {
  p.validate();
  if (!(lambda >= 0.0)) throw DomainError("stationary_extrema: lambda must be >= 0");
  const ModelParams q = shifted(p, lambda);
  std::vector<StationaryExtremum> out;
  out.push_back({0.0, kind_of(q.s - q.gamma3)});
  if (!(q.s > 0.0)) return out;
  const Equilibria eq = equilibria(q);
  if (eq.x2) out.push_back({*eq.x2, kind_of(drift_derivative(*eq.x2, q))});
  if (eq.x4) out.push_back({*eq.x4, ExtremumKind::kDegenerate});
  if (eq.x3) out.push_back({*eq.x3, kind_of(drift_derivative(*eq.x3, q))});
  return out;
}

std::vector<SteadyStateRow> steady_state_curve(const ModelParams& p, double lambda,
                                               Interval gamma3_range, int steps,
                                               HandlingCoupling coupling) {
  if (steps < 2) throw DomainError("steady_state_curve: steps must be >= 2");
  if (!(gamma3_range.hi > gamma3_range.lo) || !(gamma3_range.lo > 0.0))
    throw DomainError("steady_state_curve: gamma3 range must satisfy 0 < lo < hi");
  std::vector<SteadyStateRow> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double g3 = gamma3_range.lo + (gamma3_range.hi - gamma3_range.lo) * i / (steps - 1);
    rows.push_back({g3, stationary_extrema(with_attack_rate(p, g3, coupling), lambda)});
  }
  return rows;
}

std::optional<Interval> bistable_window(const ModelParams& p, double lambda,
                                        HandlingCoupling coupling) {
  const ModelParams q = shifted(p, lambda);
  if (!(q.s > 0.0)) return std::nullopt;
  const auto fold = fold_attack_rate(q, coupling);
  return Interval{q.s, fold.value_or(std::numeric_limits<double>::infinity())};
}

void write_steady_state_csv(std::ostream& os, double lambda, const std::vector<SteadyStateRow>& rows) {
  os << "gamma3,lambda,x,kind\n";
  for (const auto& row : rows)
    for (const auto& e : row.extrema)
      os << fmt::format("{:.10g},{:.10g},{:.10g},{}\n", row.gamma3, lambda, e.x, to_string(e.kind));
}

void write_density_csv(std::ostream& os, const DensityField& field) {
  os << "t,x,p\n";
  const auto nodes = field.nodes();
  for (std::size_t k = 0; k < field.times.size(); ++k)
    for (std::size_t i = 0; i < nodes.size(); ++i)
      os << fmt::format("{:.10g},{:.10g},{:.10g}\n", field.times[k], nodes[i], field.slices[k][i]);
}

void write_density_json(std::ostream& os, const DensityField& field, const ModelParams& p,
                        const JumpConfig& cfg) {
  nlohmann::ordered_json j;
  j["grid"] = {{"x_min", field.grid.x_min}, {"x_max", field.grid.x_max}, {"n_cells", field.grid.n_cells},
               {"spacing", field.grid.spacing()}};
  j["x0"] = field.x0;
  j["dt_pde"] = field.dt_pde;
  j["params"] = {{"s", p.s},           {"gamma2", p.gamma2},   {"gamma3", p.gamma3},
                 {"gamma4", p.gamma4}, {"lambda", p.lambda},   {"epsilon", p.epsilon},
                 {"alpha", p.alpha},   {"delta", cfg.delta},   {"r_max", cfg.r_max},
                 {"symmetric", cfg.symmetric}};
  j["times"] = field.times;
  j["mass"] = field.masses;
  j["clamped_mass"] = field.clamped_mass;
  os << j.dump(2) << '\n';
}

}  // namespace allee
