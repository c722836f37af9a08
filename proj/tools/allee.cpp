// Command-line front end: allee run --config FILE [--seed N] [--out DIR]
//                         allee list-recipes
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 1 other.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "allee/config.hpp"
#include "allee/errors.hpp"
#include "allee/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw allee::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Allee model experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the experiment named in a config file");
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  run->add_option("--config", config_path, "YAML experiment config")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override run.seed");
  auto* out_opt = run->add_option("--out", out_dir, "Override run.out_dir");

  auto* list = app.add_subcommand("list-recipes", "Print the known recipe names");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& name : allee::known_recipes()) std::cout << name << '\n';
    return 0;
  }

  std::string source = config_path;
  try {
    allee::ExperimentConfig cfg = allee::parse_config(slurp(config_path));
    if (*seed_opt) cfg.run.seed = seed;
    if (*out_opt) cfg.run.out_dir = out_dir;
    const allee::Manifest m = allee::run_experiment(cfg);
    std::cout << "wrote " << m.files.size() << " artifacts and manifest.json to "
              << m.out_dir.string() << '\n';
    return 0;
  } catch (const allee::ConfigError& e) {
    if (e.line() > 0) std::cerr << source << ":" << e.line() << ": ";
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const allee::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const allee::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
