#include "allee/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "allee/errors.hpp"
#include "allee/mppp.hpp"
#include "allee/om_path.hpp"
#include "allee/sde.hpp"

namespace allee {

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error(fmt::format("cannot open {} for writing", (dir_ / name).string()));
    fn(os);
    if (!os) throw std::runtime_error(fmt::format("write to {} failed", (dir_ / name).string()));
    files_.push_back(name);
  }

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

FpeOptions fpe_options(const ExperimentConfig& cfg) {
  FpeOptions o;
  o.dt_pde = cfg.solver.dt_pde;
  o.output_every = cfg.solver.output_every;
  o.quadrature = cfg.quadrature;
  return o;
}

void write_equilibria_json(std::ostream& os, const ModelParams& p) {
  const Equilibria eq = equilibria(p);
  nlohmann::ordered_json j;
  j["regime"] = to_string(eq.regime);
  j["beta"] = eq.beta;
  j["carrying_capacity"] = eq.carrying_capacity;
  j["x1"] = eq.x1;
  j["x2"] = eq.x2 ? nlohmann::ordered_json(*eq.x2) : nlohmann::ordered_json();
  j["x3"] = eq.x3 ? nlohmann::ordered_json(*eq.x3) : nlohmann::ordered_json();
  j["x4"] = eq.x4 ? nlohmann::ordered_json(*eq.x4) : nlohmann::ordered_json();
  j["stability_pattern"] = eq.stability_pattern();
  os << j.dump(2) << '\n';
}

void recipe_potential(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const ModelParams& p = cfg.model;
  out.write("potential.csv", [&](std::ostream& os) {
    os << "x,U,F\n";
    const int n = cfg.grid.n_cells;
    for (int i = 0; i <= n; ++i) {
      const double x = cfg.grid.face(i);
      os << fmt::format("{:.10g},{:.12g},{:.12g}\n", x, potential(x, p), drift(x, p));
    }
  });
  out.write("equilibria.json", [&](std::ostream& os) { write_equilibria_json(os, p); });
}

void recipe_phaselines(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& s = cfg.solver;
  BranchTable table = bifurcation_scan(cfg.model, {s.gamma3_min, s.gamma3_max},
                                       static_cast<int>(s.scan_steps), s.coupling);
  if (table.fold) {
    // Insert the fold itself so the merge of x2 and x3 appears in the table.
    const double g = table.fold->gamma3;
    Equilibria eq = equilibria(with_attack_rate(cfg.model, g, s.coupling));
    if (!eq.x4) {
      eq.regime = Regime::kDegenerate;
      eq.x2.reset();
      eq.x3.reset();
      eq.x4 = table.fold->x4;
    }
    auto it = std::find_if(table.rows.begin(), table.rows.end(),
                           [&](const BranchRow& r) { return r.gamma3 > g; });
    table.rows.insert(it, BranchRow{g, eq});
  }
  out.write("phaselines.csv", [&](std::ostream& os) { write_branch_csv(os, table); });
  out.write("fold.json", [&](std::ostream& os) {
    nlohmann::ordered_json j;
    j["coupling"] = to_string(s.coupling);
    if (table.fold) {
      j["gamma3"] = table.fold->gamma3;
      j["x4"] = table.fold->x4;
    } else {
      j["gamma3"] = nullptr;
      j["x4"] = nullptr;
    }
    try {
      j["critical_attack_rate"] = critical_attack_rate(cfg.model, s.coupling);
    } catch (const NoBracketError&) {
      j["critical_attack_rate"] = nullptr;
    }
    os << j.dump(2) << '\n';
  });
}

void recipe_paths(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& s = cfg.solver;
  EnsembleOptions opts;
  opts.histogram.lo = cfg.grid.x_min;
  opts.histogram.hi = cfg.grid.x_max;
  opts.histogram.bins = s.histogram_bins;
  for (std::size_t i = 0; i < s.x0.size(); ++i) {
    // Stream 0 of each initial state is the displayed path; the ensemble uses
    // its own derived seed.
    const std::uint64_t base = derive_seed(cfg.run.seed, i);
    const Trajectory path = simulate_path(cfg.model, cfg.jumps, s.x0[i], s.T, s.dt, derive_seed(base, 0));
    out.write(fmt::format("path_x0_{}.csv", i), [&](std::ostream& os) { write_trajectory_csv(os, path); });
    const EnsembleStats stats = ensemble_stats(cfg.model, cfg.jumps, s.x0[i], s.T, s.dt,
                                               static_cast<std::size_t>(s.n_paths),
                                               derive_seed(base, 1), opts);
    out.write(fmt::format("ensemble_x0_{}.json", i), [&](std::ostream& os) {
      auto j = nlohmann::ordered_json::parse([&] {
        std::ostringstream tmp;
        write_ensemble_json(tmp, stats);
        return tmp.str();
      }());
      j["x0"] = s.x0[i];
      os << j.dump(2) << '\n';
    });
  }
}

void recipe_transition(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& s = cfg.solver;
  ShootingOptions opts;
  opts.tolerance = s.tolerance;
  for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
    ModelParams p = cfg.model;
    p.lambda = s.lambdas[i];
    p.epsilon = 0.0;
    const auto [zl, zr] = transition_boundaries(p, s.x_left);
    const TransitionPath path = shoot_transition_path(p, zl, zr, s.T, static_cast<int>(s.n_steps), opts);
    out.write(fmt::format("transition_lambda_{}.csv", i), [&](std::ostream& os) { write_transition_csv(os, path); });
    out.write(fmt::format("transition_lambda_{}.json", i),
              [&](std::ostream& os) { write_transition_json(os, path, p); });
  }
}

void recipe_steady_curve(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& s = cfg.solver;
  nlohmann::ordered_json windows = nlohmann::ordered_json::array();
  std::vector<double> lambdas = {0.0};
  lambdas.insert(lambdas.end(), s.lambdas.begin(), s.lambdas.end());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto rows = steady_state_curve(cfg.model, lambdas[i], {s.gamma3_min, s.gamma3_max},
                                         static_cast<int>(s.scan_steps), s.coupling);
    out.write(fmt::format("steady_lambda_{}.csv", i),
              [&](std::ostream& os) { write_steady_state_csv(os, lambdas[i], rows); });
    nlohmann::ordered_json w;
    w["lambda"] = lambdas[i];
    const auto win = bistable_window(cfg.model, lambdas[i], s.coupling);
    if (win) {
      w["lo"] = win->lo;
      w["hi"] = std::isfinite(win->hi) ? nlohmann::ordered_json(win->hi) : nlohmann::ordered_json();
    } else {
      w["lo"] = nullptr;
      w["hi"] = nullptr;
    }
    windows.push_back(w);
  }
  out.write("bistable_windows.json", [&](std::ostream& os) { os << windows.dump(2) << '\n'; });
}

void recipe_fpe(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& s = cfg.solver;
  for (std::size_t i = 0; i < s.x0.size(); ++i) {
    const DensityField field = solve_nonlocal_fpe(cfg.model, cfg.jumps, cfg.grid, s.x0[i], s.T, fpe_options(cfg));
    out.write(fmt::format("density_x0_{}.csv", i), [&](std::ostream& os) { write_density_csv(os, field); });
    out.write(fmt::format("density_x0_{}.json", i),
              [&](std::ostream& os) { write_density_json(os, field, cfg.model, cfg.jumps); });
  }
}

void recipe_mppp(const ExperimentConfig& cfg, ArtifactWriter& out) {
  const auto& s = cfg.solver;
  MpppOptions opts;
  opts.prominence = s.prominence;
  const auto family = orbit_family(cfg.model, cfg.jumps, cfg.grid, s.x0, s.T, fpe_options(cfg), opts);
  for (std::size_t i = 0; i < family.size(); ++i) {
    out.write(fmt::format("mppp_x0_{}.csv", i), [&](std::ostream& os) { write_mppp_csv(os, family[i]); });
    out.write(fmt::format("mppp_x0_{}_events.json", i),
              [&](std::ostream& os) { write_mppp_events_json(os, family[i]); });
  }
}

using Recipe = std::function<void(const ExperimentConfig&, ArtifactWriter&)>;

const std::map<std::string, Recipe>& recipes() {
  static const std::map<std::string, Recipe> table = {
      {"potential", recipe_potential}, {"phaselines", recipe_phaselines},
      {"paths", recipe_paths},         {"transition", recipe_transition},
      {"steady_curve", recipe_steady_curve}, {"fpe", recipe_fpe},
      {"mppp", recipe_mppp},
  };
  return table;
}

}  // namespace

Manifest run_experiment(const ExperimentConfig& cfg) {
  const auto it = recipes().find(cfg.run.experiment);
  if (it == recipes().end()) throw ConfigError(fmt::format("unknown recipe '{}'", cfg.run.experiment));
  validate_config(cfg);

  const auto start = std::chrono::steady_clock::now();
  ArtifactWriter out(cfg.run.out_dir);
  it->second(cfg, out);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::ordered_json j;
  j["experiment"] = cfg.run.experiment;
  j["seed"] = cfg.run.seed;
  j["files"] = out.files();
  j["config"] = emit_config(cfg);
  j["wall_time_s"] = wall;
  std::ofstream os(out.dir() / "manifest.json", std::ios::binary);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write manifest.json");

  return {out.dir(), out.files(), wall};
}

}  // namespace allee
