#include "allee/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "allee/errors.hpp"

namespace allee {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

template <class T>
T read(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("{}: value '{}' has the wrong type", key,
                                  n.IsScalar() ? n.Scalar() : std::string("<non-scalar>")),
                      line_of(n));
  }
}

// Reads the keys of one section, rejecting any key not in `allowed`.
class Section {
 public:
  Section(const YAML::Node& root, const std::string& name) : name_(name), node_(root[name]) {
    if (node_ && !node_.IsMap())
      throw ConfigError(fmt::format("section '{}' must be a mapping", name), line_of(node_));
  }

  void check_keys(const std::set<std::string>& allowed) const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key))
        throw ConfigError(fmt::format("unknown key '{}.{}'", name_, key), line_of(kv.first));
    }
  }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!node_) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    out = read<T>(v, name_ + "." + key);
  }

  bool has(const std::string& key) const { return node_ && node_[key]; }
  int line(const std::string& key) const { return has(key) ? line_of(node_[key]) : 0; }

 private:
  std::string name_;
  YAML::Node node_;
};

const std::map<std::string, HandlingCoupling> kCouplings = {
    {"fixed_handling_time", HandlingCoupling::kFixedHandlingTime},
    {"fixed_product", HandlingCoupling::kFixedProduct},
};

const std::map<std::string, JumpQuadrature> kQuadratures = {
    {"exact_cells", JumpQuadrature::kExactCells},
    {"log_trapezoid", JumpQuadrature::kLogTrapezoid},
};

template <class E>
E lookup(const std::map<std::string, E>& table, const std::string& key, const std::string& value,
         int line) {
  const auto it = table.find(value);
  if (it == table.end()) {
    std::string names;
    for (const auto& [k, _] : table) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError(fmt::format("{}: '{}' is not one of {}", key, value, names), line);
  }
  return it->second;
}

}  // namespace

const std::vector<std::string>& known_recipes() {
  static const std::vector<std::string> names = {"potential", "phaselines", "paths",   "transition",
                                                 "steady_curve", "fpe",     "mppp"};
  return names;
}

const char* to_string(HandlingCoupling c) {
  return c == HandlingCoupling::kFixedProduct ? "fixed_product" : "fixed_handling_time";
}

const char* to_string(JumpQuadrature q) {
  return q == JumpQuadrature::kLogTrapezoid ? "log_trapezoid" : "exact_cells";
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("parse error: {}", e.msg), e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping of sections", line_of(root));
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (key != "model" && key != "jumps" && key != "grid" && key != "solver" && key != "run")
      throw ConfigError(fmt::format("unknown section '{}'", key), line_of(kv.first));
  }

  ExperimentConfig cfg;

  const Section model(root, "model");
  model.check_keys({"s", "gamma2", "gamma3", "gamma4", "lambda", "epsilon", "alpha"});
  model.get("s", cfg.model.s);
  model.get("gamma2", cfg.model.gamma2);
  model.get("gamma3", cfg.model.gamma3);
  model.get("gamma4", cfg.model.gamma4);
  model.get("lambda", cfg.model.lambda);
  model.get("epsilon", cfg.model.epsilon);
  model.get("alpha", cfg.model.alpha);

  const Section jumps(root, "jumps");
  jumps.check_keys({"delta", "r_max", "symmetric", "quadrature", "quadrature_nodes"});
  cfg.jumps.alpha = cfg.model.alpha;
  cfg.jumps.epsilon = cfg.model.epsilon;
  jumps.get("delta", cfg.jumps.delta);
  jumps.get("symmetric", cfg.jumps.symmetric);
  cfg.jumps.r_max = JumpConfig::default_r_max(cfg.model.epsilon);
  jumps.get("r_max", cfg.jumps.r_max);
  std::string quad = to_string(cfg.quadrature.rule);
  jumps.get("quadrature", quad);
  cfg.quadrature.rule = lookup(kQuadratures, "jumps.quadrature", quad, jumps.line("quadrature"));
  jumps.get("quadrature_nodes", cfg.quadrature.nodes);

  const Section grid(root, "grid");
  grid.check_keys({"x_min", "x_max", "n_cells"});
  grid.get("x_min", cfg.grid.x_min);
  grid.get("x_max", cfg.grid.x_max);
  grid.get("n_cells", cfg.grid.n_cells);

  const Section solver(root, "solver");
  solver.check_keys({"T", "dt", "n_paths", "n_steps", "dt_pde", "output_every", "x0", "lambdas",
                     "x_left", "tolerance", "gamma3_min", "gamma3_max", "scan_steps", "coupling",
                     "histogram_bins", "prominence"});
  auto& s = cfg.solver;
  solver.get("T", s.T);
  solver.get("dt", s.dt);
  solver.get("n_paths", s.n_paths);
  solver.get("n_steps", s.n_steps);
  solver.get("dt_pde", s.dt_pde);
  solver.get("output_every", s.output_every);
  solver.get("x0", s.x0);
  solver.get("lambdas", s.lambdas);
  solver.get("x_left", s.x_left);
  solver.get("tolerance", s.tolerance);
  solver.get("gamma3_min", s.gamma3_min);
  solver.get("gamma3_max", s.gamma3_max);
  solver.get("scan_steps", s.scan_steps);
  std::string coupling = to_string(s.coupling);
  solver.get("coupling", coupling);
  s.coupling = lookup(kCouplings, "solver.coupling", coupling, solver.line("coupling"));
  solver.get("histogram_bins", s.histogram_bins);
  solver.get("prominence", s.prominence);

  const Section run(root, "run");
  run.check_keys({"experiment", "out_dir", "seed"});
  if (!run.has("experiment")) throw ConfigError("run.experiment is required");
  run.get("experiment", cfg.run.experiment);
  run.get("out_dir", cfg.run.out_dir);
  run.get("seed", cfg.run.seed);
  if (std::find(known_recipes().begin(), known_recipes().end(), cfg.run.experiment) ==
      known_recipes().end())
    throw ConfigError(fmt::format("run.experiment: unknown recipe '{}'", cfg.run.experiment),
                      run.line("experiment"));

  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  try {
    cfg.model.validate();
    cfg.jumps.validate();
    cfg.grid.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  require(cfg.jumps.alpha == cfg.model.alpha && cfg.jumps.epsilon == cfg.model.epsilon,
          "jumps must mirror model.alpha and model.epsilon");
  require(cfg.quadrature.nodes >= 2, "jumps.quadrature_nodes must be >= 2");
  const auto& s = cfg.solver;
  require(s.T > 0.0, "solver.T must be > 0");
  require(s.dt > 0.0 && s.dt <= s.T, "solver.dt must lie in (0, T]");
  require(s.n_paths >= 1, "solver.n_paths must be >= 1");
  require(s.n_steps >= 6, "solver.n_steps must be >= 6");
  require(std::isfinite(s.dt_pde), "solver.dt_pde must be finite");
  require(s.output_every > 0.0, "solver.output_every must be > 0");
  require(!s.x0.empty(), "solver.x0 must list at least one initial state");
  for (double x : s.x0)
    require(x > cfg.grid.x_min && x < cfg.grid.x_max, "solver.x0 entries must lie inside the grid");
  require(!s.lambdas.empty(), "solver.lambdas must list at least one noise level");
  for (double l : s.lambdas) require(l > 0.0, "solver.lambdas entries must be > 0");
  require(s.x_left > 0.0, "solver.x_left must be > 0");
  require(s.tolerance > 0.0, "solver.tolerance must be > 0");
  require(s.gamma3_min > 0.0 && s.gamma3_max > s.gamma3_min,
          "solver.gamma3_min/gamma3_max must satisfy 0 < min < max");
  require(s.scan_steps >= 2, "solver.scan_steps must be >= 2");
  require(s.histogram_bins >= 1, "solver.histogram_bins must be >= 1");
  require(s.prominence >= 0.0 && s.prominence < 1.0, "solver.prominence must lie in [0, 1)");
  require(!cfg.run.out_dir.empty(), "run.out_dir must not be empty");
}

std::string emit_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "s" << YAML::Value << cfg.model.s;
  out << YAML::Key << "gamma2" << YAML::Value << cfg.model.gamma2;
  out << YAML::Key << "gamma3" << YAML::Value << cfg.model.gamma3;
  out << YAML::Key << "gamma4" << YAML::Value << cfg.model.gamma4;
  out << YAML::Key << "lambda" << YAML::Value << cfg.model.lambda;
  out << YAML::Key << "epsilon" << YAML::Value << cfg.model.epsilon;
  out << YAML::Key << "alpha" << YAML::Value << cfg.model.alpha;
  out << YAML::EndMap;

  out << YAML::Key << "jumps" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "delta" << YAML::Value << cfg.jumps.delta;
  out << YAML::Key << "r_max" << YAML::Value << cfg.jumps.r_max;
  out << YAML::Key << "symmetric" << YAML::Value << cfg.jumps.symmetric;
  out << YAML::Key << "quadrature" << YAML::Value << to_string(cfg.quadrature.rule);
  out << YAML::Key << "quadrature_nodes" << YAML::Value << cfg.quadrature.nodes;
  out << YAML::EndMap;

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "x_min" << YAML::Value << cfg.grid.x_min;
  out << YAML::Key << "x_max" << YAML::Value << cfg.grid.x_max;
  out << YAML::Key << "n_cells" << YAML::Value << cfg.grid.n_cells;
  out << YAML::EndMap;

  const auto& s = cfg.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "T" << YAML::Value << s.T;
  out << YAML::Key << "dt" << YAML::Value << s.dt;
  out << YAML::Key << "n_paths" << YAML::Value << s.n_paths;
  out << YAML::Key << "n_steps" << YAML::Value << s.n_steps;
  out << YAML::Key << "dt_pde" << YAML::Value << s.dt_pde;
  out << YAML::Key << "output_every" << YAML::Value << s.output_every;
  out << YAML::Key << "x0" << YAML::Value << YAML::Flow << s.x0;
  out << YAML::Key << "lambdas" << YAML::Value << YAML::Flow << s.lambdas;
  out << YAML::Key << "x_left" << YAML::Value << s.x_left;
  out << YAML::Key << "tolerance" << YAML::Value << s.tolerance;
  out << YAML::Key << "gamma3_min" << YAML::Value << s.gamma3_min;
  out << YAML::Key << "gamma3_max" << YAML::Value << s.gamma3_max;
  out << YAML::Key << "scan_steps" << YAML::Value << s.scan_steps;
  out << YAML::Key << "coupling" << YAML::Value << to_string(s.coupling);
  out << YAML::Key << "histogram_bins" << YAML::Value << s.histogram_bins;
  out << YAML::Key << "prominence" << YAML::Value << s.prominence;
  out << YAML::EndMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "experiment" << YAML::Value << cfg.run.experiment;
  out << YAML::Key << "out_dir" << YAML::Value << YAML::DoubleQuoted << cfg.run.out_dir;
  out << YAML::Key << "seed" << YAML::Value << cfg.run.seed;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace allee
