#include "allee/om_path.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include "json.hpp"

#include "allee/errors.hpp"

namespace allee {

namespace {

void require_lambda(const ModelParams& p, const char* who) {
  if (!(p.lambda > 0.0)) throw DomainError(fmt::format("{}: lambda must be > 0", who));
}

struct Orbit {
  std::vector<double> z;
  std::vector<double> w;
  bool escaped = false;
};

// Classical RK4 for z'' = f(z) from (z0, v0). Stops early on escape.
Orbit integrate(const ModelParams& p, double z0, double v0, double dt, int n, double blowup,
                bool keep) {
  auto f = [&](double z) { return euler_lagrange_rhs(z, p); };
  Orbit o;
  if (keep) {
    o.z.reserve(static_cast<std::size_t>(n) + 1);
    o.w.reserve(static_cast<std::size_t>(n) + 1);
  }
  double z = z0;
  double w = v0;
  if (keep) {
    o.z.push_back(z);
    o.w.push_back(w);
  }
  for (int i = 0; i < n; ++i) {
    const double z_prev = z;
    const double k1z = w, k1w = f(z);
    const double k2z = w + 0.5 * dt * k1w, k2w = f(z + 0.5 * dt * k1z);
    const double k3z = w + 0.5 * dt * k2w, k3w = f(z + 0.5 * dt * k2z);
    const double k4z = w + dt * k3w, k4w = f(z + dt * k3z);
    z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
    w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    if (!std::isfinite(z) || std::abs(z) > blowup) {
      // Overflow can surface as NaN; keep the direction of the last finite state.
      o.escaped = true;
      o.z.push_back(std::isfinite(z) ? z : std::copysign(blowup, z_prev));
      return o;
    }
    if (keep) {
      o.z.push_back(z);
      o.w.push_back(w);
    }
  }
  if (!keep) o.z.push_back(z);
  return o;
}

}  // namespace

double om_gaussian(double z, double z_dot, const ModelParams& p) {
  require_lambda(p, "om_gaussian");
  const double r = (lamperti_drift(z, p) - z_dot) / p.lambda;
  return r * r + lamperti_drift_d1(z, p);
}

double om_jump(double x, double x_dot, const ModelParams& p, const JumpConfig& cfg) {
  require_lambda(p, "om_jump");
  if (!(x > 0.0)) throw DomainError("om_jump: state must be > 0");
  const double r = x_dot - drift(x, p);
  const double scaled = r / (p.lambda * x);
  const double jump_mean = cfg.epsilon > 0.0 ? compensator_drift(cfg) : 0.0;
  return scaled * scaled + drift_derivative(x, p) +
         2.0 * r / (p.lambda * p.lambda * x) * jump_mean;
}

double euler_lagrange_rhs(double z, const ModelParams& p) {
  require_lambda(p, "euler_lagrange_rhs");
  return 0.5 * p.lambda * p.lambda * lamperti_drift_d2(z, p) +
         lamperti_drift_d1(z, p) * lamperti_drift(z, p);
}

std::pair<double, double> transition_boundaries(const ModelParams& p, double x_left) {
  if (!(x_left > 0.0)) throw DomainError("transition_boundaries: x_left must be > 0");
  const Equilibria eq = equilibria(p);
  if (!eq.x3) throw DomainError("transition_boundaries: the model has no upper stable state");
  return {std::log(x_left), std::log(*eq.x3)};
}

TransitionPath shoot_transition_path(const ModelParams& p, double z_left, double z_right, double T,
                                     int n_steps, const ShootingOptions& opts) {
  p.validate();
  require_lambda(p, "shoot_transition_path");
  if (!(T > 0.0) || n_steps < 6) throw DomainError("shoot_transition_path: need T > 0 and n_steps >= 6");
  if (!(std::abs(z_left) < opts.blowup && std::abs(z_right) < opts.blowup))
    throw DomainError("shoot_transition_path: boundaries outside the working domain");
  const double dt = T / n_steps;

  auto mismatch = [&](double v0) {
    const Orbit o = integrate(p, z_left, v0, dt, n_steps, opts.blowup, false);
    if (o.escaped) return std::copysign(std::numeric_limits<double>::infinity(), o.z.back());
    return o.z.back() - z_right;
  };

  // Bracket by geometric expansion around the straight-line slope.
  const double guess = (z_right - z_left) / T;
  double lo = guess;
  double hi = guess;
  double m_lo = mismatch(lo);
  double m_hi = m_lo;
  int iterations = 1;
  double width = std::max(1.0, std::abs(guess));
  while (!(m_lo <= 0.0 && m_hi >= 0.0)) {
    if (iterations >= opts.max_iterations)
      throw NoBracketError(fmt::format(
          "shoot_transition_path: no sign change of z(T) - z_right for z'(0) in [{}, {}]", lo, hi));
    if (m_lo > 0.0) {
      lo = guess - width;
      m_lo = mismatch(lo);
      ++iterations;
    }
    if (m_hi < 0.0) {
      hi = guess + width;
      m_hi = mismatch(hi);
      ++iterations;
    }
    width *= 2.0;
  }
  const double bracket_lo = lo;
  const double bracket_hi = hi;

  double best = std::abs(m_lo) < std::abs(m_hi) ? lo : hi;
  double best_m = std::min(std::abs(m_lo), std::abs(m_hi));
  while (best_m > opts.tolerance) {
    if (iterations >= opts.max_iterations || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi))
      throw NoConvergenceError(fmt::format(
          "shoot_transition_path: terminal mismatch {} after {} iterations, bracket [{}, {}]",
          best_m, iterations, lo, hi));
    const double mid = 0.5 * (lo + hi);
    const double m = mismatch(mid);
    ++iterations;
    if (m <= 0.0) lo = mid;
    else hi = mid;
    if (std::abs(m) < best_m) {
      best = mid;
      best_m = std::abs(m);
    }
  }

  const Orbit o = integrate(p, z_left, best, dt, n_steps, opts.blowup, true);
  TransitionPath path;
  path.z = o.z;
  path.z_dot = o.w;
  path.times.resize(path.z.size());
  for (std::size_t i = 0; i < path.times.size(); ++i) path.times[i] = static_cast<double>(i) * dt;
  path.z_left = z_left;
  path.z_right = z_right;
  path.report.initial_velocity = best;
  path.report.terminal_mismatch = path.z.back() - z_right;
  path.report.iterations = iterations;
  path.report.bracket_lo = bracket_lo;
  path.report.bracket_hi = bracket_hi;
  path.report.el_residual = el_residual(path, p);
  path.action = action(path, p);
  return path;
}

double action(const TransitionPath& path, const ModelParams& p) {
  const std::size_t n = path.z.size();
  if (n < 2 || path.z_dot.size() != n || path.times.size() != n)
    throw DomainError("action: path needs at least two nodes with matching z, z_dot and times");
  double sum = 0.0;
  double prev = om_gaussian(path.z[0], path.z_dot[0], p);
  for (std::size_t i = 1; i < n; ++i) {
    const double cur = om_gaussian(path.z[i], path.z_dot[i], p);
    sum += 0.5 * (prev + cur) * (path.times[i] - path.times[i - 1]);
    prev = cur;
  }
  return sum;
}

double el_residual(const TransitionPath& path, const ModelParams& p) {
  const auto& z = path.z;
  const std::size_t n = z.size();
  if (n < 6) throw DomainError("el_residual: need at least 6 nodes");
  const double dt = path.times[1] - path.times[0];
  const double inv = 1.0 / (12.0 * dt * dt);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double acc;
    if (i == 1) {
      acc = (10 * z[0] - 15 * z[1] - 4 * z[2] + 14 * z[3] - 6 * z[4] + z[5]) * inv;
    } else if (i + 2 == n) {
      acc = (10 * z[n - 1] - 15 * z[n - 2] - 4 * z[n - 3] + 14 * z[n - 4] - 6 * z[n - 5] + z[n - 6]) * inv;
    } else {
      acc = (-z[i + 2] + 16 * z[i + 1] - 30 * z[i] + 16 * z[i - 1] - z[i - 2]) * inv;
    }
    worst = std::max(worst, std::abs(acc - euler_lagrange_rhs(z[i], p)));
  }
  return worst;
}

void write_transition_csv(std::ostream& os, const TransitionPath& path) {
  os << "t,z,x,z_dot\n";
  for (std::size_t i = 0; i < path.z.size(); ++i)
    os << fmt::format("{:.10g},{:.12g},{:.12g},{:.12g}\n", path.times[i], path.z[i],
                      std::exp(path.z[i]), path.z_dot[i]);
}

void write_transition_json(std::ostream& os, const TransitionPath& path, const ModelParams& p) {
  nlohmann::ordered_json j;
  j["lambda"] = p.lambda;
  j["T"] = path.times.empty() ? 0.0 : path.times.back();
  j["n_steps"] = path.times.empty() ? 0 : path.times.size() - 1;
  j["z_left"] = path.z_left;
  j["z_right"] = path.z_right;
  j["action"] = path.action;
  j["initial_velocity"] = path.report.initial_velocity;
  j["terminal_mismatch"] = path.report.terminal_mismatch;
  j["iterations"] = path.report.iterations;
  j["bracket"] = {path.report.bracket_lo, path.report.bracket_hi};
  j["el_residual"] = path.report.el_residual;
  os << j.dump(2) << '\n';
}

}  // namespace allee
