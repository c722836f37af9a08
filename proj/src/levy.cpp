#include "allee/levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "allee/errors.hpp"

namespace allee {

JumpConfig JumpConfig::with_defaults(double alpha, double epsilon, bool symmetric) {
  JumpConfig cfg;
  cfg.alpha = alpha;
  cfg.epsilon = epsilon;
  cfg.symmetric = symmetric;
  cfg.delta = 0.1;
  cfg.r_max = default_r_max(epsilon);
  return cfg;
}

double JumpConfig::default_r_max(double epsilon) {
  return epsilon > 0.0 ? std::min(10.0, (1.0 - 1e-3) / epsilon) : 10.0;
}

void JumpConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
  };
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 2.0, "jumps.alpha must lie in (0,2)");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "jumps.epsilon must be >= 0");
  require(std::isfinite(delta) && delta > 0.0, "jumps.delta must be > 0");
  require(std::isfinite(r_max) && r_max > delta, "jumps.r_max must exceed jumps.delta");
  if (symmetric)
    require(epsilon * r_max < 1.0,
            fmt::format("jumps: epsilon * r_max = {} must be < 1 so that 1 + epsilon y > 0",
                        epsilon * r_max));
}

double stable_constant(double alpha) {
  return alpha * std::tgamma(0.5 * (1.0 + alpha)) /
         (std::pow(2.0, 1.0 - alpha) * std::sqrt(std::numbers::pi) * std::tgamma(1.0 - 0.5 * alpha));
}

double levy_density(double z, double alpha) {
  if (z == 0.0) throw DomainError("levy_density: singular at z = 0");
  return stable_constant(alpha) * std::pow(std::abs(z), -1.0 - alpha);
}

double levy_mass(double alpha, double lo, double hi) {
  return stable_constant(alpha) * (std::pow(lo, -alpha) - std::pow(hi, -alpha)) / alpha;
}

double levy_first_moment(double alpha, double lo, double hi) {
  const double c = stable_constant(alpha);
  if (alpha == 1.0) return c * std::log(hi / lo);
  return c * (std::pow(lo, 1.0 - alpha) - std::pow(hi, 1.0 - alpha)) / (alpha - 1.0);
}

double total_intensity(const JumpConfig& cfg) {
  const double one_side = levy_mass(cfg.alpha, cfg.delta, cfg.r_max);
  return cfg.symmetric ? 2.0 * one_side : one_side;
}

double compensator_drift(const JumpConfig& cfg) {
  if (cfg.symmetric) return 0.0;
  return cfg.epsilon * levy_first_moment(cfg.alpha, cfg.delta, cfg.r_max);
}

double draw_stable(double alpha, Rng& rng) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("draw_stable: alpha must lie in (0,2]");
  constexpr double half_pi = 0.5 * std::numbers::pi;
  std::uniform_real_distribution<double> angle(-half_pi, half_pi);
  std::exponential_distribution<double> expo(1.0);
  double v = angle(rng);
  while (v == -half_pi) v = angle(rng);
  const double w = expo(rng);
  if (alpha == 1.0) return std::tan(v);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
}

std::vector<double> sample_stable(double alpha, std::size_t n, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("sample_stable: alpha must lie in (0,2]");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = draw_stable(alpha, rng);
  return out;
}

double draw_jump_size(const JumpConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double lo = std::pow(cfg.delta, -cfg.alpha);
  const double hi = std::pow(cfg.r_max, -cfg.alpha);
  const double u = unif(rng);
  const double magnitude = std::pow(lo - u * (lo - hi), -1.0 / cfg.alpha);
  if (!cfg.symmetric) return magnitude;
  return unif(rng) < 0.5 ? -magnitude : magnitude;
}

std::vector<Jump> sample_jumps(const JumpConfig& cfg, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw DomainError("sample_jumps: dt must be > 0");
  std::poisson_distribution<int> arrivals(total_intensity(cfg) * dt);
  const int count = arrivals(rng);
  std::vector<Jump> jumps;
  jumps.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double y = draw_jump_size(cfg, rng);
    const double m = cfg.epsilon * y;
    if (!(1.0 + m > 0.0)) throw DomainError(fmt::format("jump multiplier {} violates 1 + eps y > 0", m));
    jumps.push_back({y, m});
  }
  return jumps;
}

std::vector<Jump> sample_jumps(const JumpConfig& cfg, double dt, std::uint64_t seed) {
  Rng rng(seed);
  return sample_jumps(cfg, dt, rng);
}

}  // namespace allee
