#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wildgas::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 1,
  kInvariantViolation = 2,
  kStall = 3,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unset keys fall back to per-scenario defaults at run time.
struct ExperimentConfig {
  std::string scenario = "verify";
  std::optional<int> dim;
  std::optional<int> n_space;
  std::optional<int> n_time;
  std::optional<double> t_final;
  std::optional<std::string> preset;
  /// Initial data from snapshot files instead of the preset (all three or none).
  std::optional<std::string> rho0_file;
  std::optional<std::string> theta0_file;
  std::optional<std::string> u0_file;
  std::optional<double> eps;
  std::optional<int> steps;
  std::optional<int> depth;
  std::optional<double> tau;
  std::optional<double> chi_bar;
  std::optional<double> k;
  std::optional<double> margin;
  std::optional<double> t_short;
  std::optional<double> perturbation;
  std::uint64_t seed = 0;
};

const std::vector<std::string>& scenario_names();
const std::vector<std::string>& config_keys();

/// key = value lines; '#' starts a comment. Unknown or repeated keys and
/// malformed values throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks ranges and scenario-specific preconditions (ConfigError).
void validate(const ExperimentConfig& config);

/// Thread cap from WILDGAS_THREADS (1 when unset). Throws ConfigError on junk.
int thread_cap();

/// Runs the scenario, writing every artifact under `out`. Returns the exit code.
int run(const ExperimentConfig& config, const std::filesystem::path& out, std::ostream& log);

}  // namespace wildgas::cli
