#include "allee/sde.hpp"

#include <cmath>

#include <fmt/format.h>
#include "json.hpp"

#include "allee/errors.hpp"
#include "allee/parallel.hpp"

namespace allee {

namespace {

struct StepPlan {
  std::size_t steps = 0;
  double dt = 0.0;
};

StepPlan plan_steps(double T, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be > 0");
  if (!(T >= dt)) throw DomainError("T must be >= dt");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  return {steps, T / static_cast<double>(steps)};
}

// One Euler-Maruyama integrator for the multiplicative jump-diffusion.
// Several arrivals inside one step compose multiplicatively, which equals the
// additive sum for a single arrival and keeps X > 0 for any number of them.
class JumpDiffusionStepper {
 public:
  JumpDiffusionStepper(const ModelParams& p, const JumpConfig& cfg, double dt)
      : p_(p),
        cfg_(cfg),
        dt_(dt),
        sqrt_dt_(std::sqrt(dt)),
        compensator_(cfg.epsilon > 0.0 ? compensator_drift(cfg) : 0.0),
        has_jumps_(cfg.epsilon > 0.0),
        arrivals_(has_jumps_ ? total_intensity(cfg) * dt : 1.0) {}

  // Returns the number of jumps in the step; x is updated in place.
  int step(double& x, Rng& rng) {
    if (x <= 0.0) return 0;
    double increment = (per_capita_growth(x, p_) - compensator_) * dt_;
    if (p_.lambda > 0.0) increment += p_.lambda * sqrt_dt_ * gauss_(rng);
    double jump_factor = 1.0;
    int count = 0;
    if (has_jumps_) {
      count = arrivals_(rng);
      for (int j = 0; j < count; ++j) {
        const double m = cfg_.epsilon * draw_jump_size(cfg_, rng);
        if (!(1.0 + m > 0.0))
          throw DomainError(fmt::format("jump multiplier {} violates 1 + eps y > 0", m));
        jump_factor *= 1.0 + m;
      }
    }
    x = x * increment + x * jump_factor;
    if (!(x > 0.0)) x = 0.0;
    return count;
  }

 private:
  ModelParams p_;
  JumpConfig cfg_;
  double dt_;
  double sqrt_dt_;
  double compensator_;
  bool has_jumps_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::poisson_distribution<int> arrivals_;
};

void check_inputs(const ModelParams& p, const JumpConfig& cfg, double x0, double dt) {
  p.validate();
  cfg.validate();
  if (cfg.epsilon != p.epsilon || cfg.alpha != p.alpha)
    throw DomainError("jump config must carry the same alpha and epsilon as the model");
  if (!(x0 > 0.0)) throw DomainError("x0 must be > 0");
  if (cfg.epsilon > 0.0 && dt * total_intensity(cfg) > 10.0)
    throw DomainError(fmt::format("step size: dt * nu(Y) = {} exceeds 10 jumps per step",
                                  dt * total_intensity(cfg)));
}

}  // namespace

JumpConfig jump_config_for(const ModelParams& p) {
  return JumpConfig::with_defaults(p.alpha, p.epsilon);
}

Trajectory simulate_path(const ModelParams& p, const JumpConfig& cfg, double x0, double T,
                         double dt, std::uint64_t seed) {
  check_inputs(p, cfg, x0, dt);
  const StepPlan plan = plan_steps(T, dt);

  Trajectory path;
  path.params = p;
  path.jumps = cfg;
  path.seed = seed;
  path.times.reserve(plan.steps + 1);
  path.states.reserve(plan.steps + 1);
  path.times.push_back(0.0);
  path.states.push_back(x0);

  Rng rng(seed);
  JumpDiffusionStepper stepper(p, cfg, plan.dt);
  double x = x0;
  for (std::size_t i = 1; i <= plan.steps; ++i) {
    const int jumps = stepper.step(x, rng);
    if (jumps > 0) {
      path.jump_marks.push_back(i);
      path.jump_count += static_cast<std::size_t>(jumps);
    }
    path.times.push_back(static_cast<double>(i) * plan.dt);
    path.states.push_back(x);
  }
  path.absorbed = x <= 0.0;
  return path;
}

Trajectory simulate_lamperti(const ModelParams& p, double y0, double T, double dt,
                             std::uint64_t seed) {
  p.validate();
  if (!(p.lambda > 0.0)) throw DomainError("simulate_lamperti: lambda must be > 0");
  if (p.epsilon != 0.0) throw DomainError("simulate_lamperti: only the Gaussian case (epsilon = 0) is transformable");
  const StepPlan plan = plan_steps(T, dt);

  Trajectory path;
  path.params = p;
  path.jumps = jump_config_for(p);
  path.seed = seed;
  path.times.reserve(plan.steps + 1);
  path.states.reserve(plan.steps + 1);
  path.times.push_back(0.0);
  path.states.push_back(y0);

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise = p.lambda * std::sqrt(plan.dt);
  double y = y0;
  for (std::size_t i = 1; i <= plan.steps; ++i) {
    y += lamperti_drift(y, p) * plan.dt + noise * gauss(rng);
    path.times.push_back(static_cast<double>(i) * plan.dt);
    path.states.push_back(y);
  }
  return path;
}

std::vector<double> HistogramSpec::edges() const {
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  return e;
}

std::vector<double> Histogram::masses() const {
  std::vector<double> m(counts.size(), 0.0);
  if (total == 0) return m;
  for (std::size_t i = 0; i < counts.size(); ++i)
    m[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return m;
}

Histogram make_histogram(const std::vector<double>& values, const HistogramSpec& spec) {
  if (spec.bins < 1 || !(spec.hi > spec.lo)) throw DomainError("histogram: need bins >= 1 and hi > lo");
  Histogram h;
  h.edges = spec.edges();
  h.counts.assign(static_cast<std::size_t>(spec.bins), 0);
  h.total = static_cast<std::int64_t>(values.size());
  for (double v : values) {
    if (!(v >= spec.lo && v < spec.hi)) continue;
    auto bin = static_cast<std::size_t>((v - spec.lo) / spec.width());
    if (bin >= h.counts.size()) bin = h.counts.size() - 1;
    ++h.counts[bin];
  }
  return h;
}

EnsembleStats ensemble_stats(const ModelParams& p, const JumpConfig& cfg, double x0, double T,
                             double dt, std::size_t n_paths, std::uint64_t seed,
                             const EnsembleOptions& opts) {
  check_inputs(p, cfg, x0, dt);
  if (n_paths < 1) throw DomainError("ensemble_stats: n_paths must be >= 1");
  if (opts.mean_path_points < 2) throw DomainError("ensemble_stats: mean_path_points must be >= 2");
  const StepPlan plan = plan_steps(T, dt);

  // Record indices for the mean path: evenly spaced over the step count.
  const auto points = static_cast<std::size_t>(opts.mean_path_points);
  std::vector<std::size_t> record(points);
  for (std::size_t k = 0; k < points; ++k)
    record[k] = static_cast<std::size_t>(std::llround(static_cast<double>(plan.steps) * k / (points - 1)));

  std::vector<double> terminal(n_paths);
  std::vector<std::size_t> jump_counts(n_paths);
  std::vector<std::vector<double>> sampled(n_paths);

  parallel_for(n_paths, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    JumpDiffusionStepper stepper(p, cfg, plan.dt);
    std::vector<double> samples(points);
    double x = x0;
    std::size_t jumps = 0;
    std::size_t next = 0;
    for (std::size_t step = 0; step <= plan.steps; ++step) {
      if (step > 0) jumps += static_cast<std::size_t>(stepper.step(x, rng));
      while (next < points && record[next] == step) samples[next++] = x;
    }
    terminal[i] = x;
    jump_counts[i] = jumps;
    sampled[i] = std::move(samples);
  });

  EnsembleStats stats;
  stats.n_paths = n_paths;
  stats.seed = seed;
  std::size_t extinct = 0;
  double total_jumps = 0.0;
  stats.mean_path.assign(points, 0.0);
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (terminal[i] < opts.extinction_threshold) ++extinct;
    total_jumps += static_cast<double>(jump_counts[i]);
    for (std::size_t k = 0; k < points; ++k) stats.mean_path[k] += sampled[i][k];
  }
  for (auto& v : stats.mean_path) v /= static_cast<double>(n_paths);
  stats.mean_times.resize(points);
  for (std::size_t k = 0; k < points; ++k) stats.mean_times[k] = static_cast<double>(record[k]) * plan.dt;
  stats.extinction_fraction = static_cast<double>(extinct) / static_cast<double>(n_paths);
  stats.mean_jump_count = total_jumps / static_cast<double>(n_paths);
  stats.terminal = make_histogram(terminal, opts.histogram);
  stats.terminal_states = std::move(terminal);
  return stats;
}

std::vector<double> lamperti_terminal_states(const ModelParams& p, double x0, double T, double dt,
                                             std::size_t n_paths, std::uint64_t seed) {
  if (!(x0 > 0.0)) throw DomainError("x0 must be > 0");
  std::vector<double> out(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    const Trajectory path = simulate_lamperti(p, std::log(x0), T, dt, derive_seed(seed, i));
    out[i] = std::exp(path.states.back());
  });
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& path) {
  os << "t,x,jump_flag\n";
  std::size_t next_mark = 0;
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    int flag = 0;
    if (next_mark < path.jump_marks.size() && path.jump_marks[next_mark] == i) {
      flag = 1;
      ++next_mark;
    }
    os << fmt::format("{:.10g},{:.10g},{}\n", path.times[i], path.states[i], flag);
  }
}

void write_ensemble_json(std::ostream& os, const EnsembleStats& stats) {
  nlohmann::ordered_json j;
  j["extinction_fraction"] = stats.extinction_fraction;
  j["n_paths"] = stats.n_paths;
  j["seed"] = stats.seed;
  j["mean_jump_count"] = stats.mean_jump_count;
  j["histogram"] = {{"edges", stats.terminal.edges}, {"counts", stats.terminal.counts}};
  os << j.dump(2) << '\n';
}

}  // namespace allee
