// Command-line driver for rotationally symmetric List flow experiments
// described by INI config files.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "listflow/cli/commands.hpp"
#include "listflow/cli/config.hpp"

namespace {

using listflow::cli::ConfigError;
using listflow::cli::kConfigError;

int with_config(const std::string& path, auto&& body) {
  listflow::cli::RunConfig cfg;
  try {
    cfg = listflow::cli::load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return body(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference List flow simulator"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::size_t> levels;
  std::string run_dir;
  std::optional<double> blowup_c;

  auto* run = app.add_subcommand("run", "evolve a config and write CSV output");
  run->add_option("config", config, "config file")->required();

  auto* check = app.add_subcommand("check", "print bound constants and tail decay report");
  check->add_option("config", config, "config file")->required();

  auto* conv = app.add_subcommand("converge", "refinement study over doubling grids");
  conv->add_option("config", config, "config file")->required();
  conv->add_option("--levels", levels, "interval counts, each double the previous")
      ->delimiter(',')
      ->required();

  auto* resc = app.add_subcommand("rescale", "blow-up scan and rescaled profiles of a run");
  resc->add_option("run_dir", run_dir, "output directory of a previous run")->required();
  resc->add_option("-C,--C", blowup_c, "constant C >= 1 of the blow-up scan (default: the run's blowup_c)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return with_config(config, [](const auto& c) {
        return listflow::cli::run(c, std::cerr);
      });
    }
    if (*check) {
      return with_config(config, [](const auto& c) {
        return listflow::cli::check(c, std::cout);
      });
    }
    if (*conv) {
      return with_config(config, [&](const auto& c) {
        return listflow::cli::converge_cmd(c, levels, std::cout);
      });
    }
    if (*resc) return listflow::cli::rescale_cmd(run_dir, blowup_c, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
