#pragma once

// Layered run configuration for the command-line tool: built-in defaults,
// then a flat JSON config file, then command-line flags. The merged JSON is
// what --dump-config prints and re-parses to the same RunConfig.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "twolevel/ctmc.hpp"
#include "twolevel/experiments.hpp"
#include "twolevel/model.hpp"

namespace twolevel::cli {

enum class Command { Params, Simulate, Fluid, Experiment };

enum class KeyType { Double, Int, Seed, String, IntList, DoubleList };

struct KeySpec {
  std::string key;
  KeyType type;
  std::string help;
};

// Every key a command accepts, in flag order.
const std::vector<KeySpec>& keys_for(Command command);

const std::vector<std::string>& experiment_names();
const std::vector<std::string>& fluid_system_names();

// defaults <- file <- flags, then normalization: when c2 is given the ratio
// becomes c2 / n. Throws DomainError naming the offending key.
nlohmann::json effective_config(Command command, const nlohmann::json& file,
                                const nlohmann::json& flags);

struct RunConfig {
  ModelParams params;
  int n = 100;
  int c2 = 30;
  double r = 0.3;
  double horizon = 50.0;
  double burn_in = 10.0;
  int replications = 1;
  std::optional<std::uint64_t> seed;
  double grid_dt = 0.01;
  double fluid_dt = 1e-3;
  FluidState init{};
  std::vector<int> n_list;
  std::vector<double> r_grid;
  int workers = 0;
  Process process = Process::Main;
  std::string system = "hybrid";
  std::string experiment;
  ExperimentConfig thresholds;  // only the acceptance floors are read
};

// Typed view of an effective config; validates model parameters and the
// requirements of the command (the seed for simulate and experiment).
RunConfig parse_run_config(Command command, const nlohmann::json& effective);

ExperimentConfig to_experiment_config(const RunConfig& cfg);

}  // namespace twolevel::cli
