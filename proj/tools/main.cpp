#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  namespace wc = wildgas::cli;
  CLI::App app{"wildgas experiment runner"};
  std::string config_path;
  std::string out_dir = "out";
  std::string scenario;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "seed (overrides the config)");
  app.add_option("--scenario", scenario, "wild | dissipative | weakstrong | verify (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? wc::kSuccess : wc::kConfigError;
  }

  wc::ExperimentConfig config;
  try {
    if (!config_path.empty()) config = wc::load_config(config_path);
  } catch (const wc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return wc::kConfigError;
  }
  if (!scenario.empty()) config.scenario = scenario;
  if (*seed_opt) config.seed = seed;
  return wc::run(config, out_dir, std::cerr);
}
