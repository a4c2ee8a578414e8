#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "empo/scenarios.hpp"

int main(int argc, char** argv) {
  CLI::App app{"empowerment toolkit: grid worlds, discrete channels, linear-Gaussian "
               "approximations and pendulum control"};
  app.require_subcommand(1);

  std::string config_file;
  std::string out_dir;
  int workers = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  CLI::App* run_cmd = app.add_subcommand("run", "execute a scenario config and write artifacts");
  run_cmd->add_option("config", config_file, "scenario config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
  run_cmd->add_option("--workers", workers, "worker threads, 0 = all cores");
  run_cmd->add_option("--seed", seed, "run seed (overrides the config)")
      ->each([&](const std::string&) { seed_set = true; });

  CLI::App* verify_cmd =
      app.add_subcommand("verify", "validate a config and print the resolved parameters");
  verify_cmd->add_option("config", config_file, "scenario config (JSON)")->required();
  verify_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
  verify_cmd->add_option("--workers", workers, "worker threads, 0 = all cores");
  verify_cmd->add_option("--seed", seed, "run seed (overrides the config)")
      ->each([&](const std::string&) { seed_set = true; });

  CLI11_PARSE(app, argc, argv);

  empo::cli::Overrides overrides;
  if (!out_dir.empty()) overrides.out_dir = out_dir;
  if (workers >= 0) overrides.workers = workers;
  if (seed_set) overrides.seed = seed;

  if (run_cmd->parsed()) {
    return empo::cli::run(config_file, overrides, std::cout, std::cerr);
  }
  return empo::cli::verify(config_file, overrides, std::cout, std::cerr);
}
