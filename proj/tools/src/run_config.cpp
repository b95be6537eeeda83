#include "run_config.hpp"

#include <algorithm>
#include <cmath>

#include "twolevel/errors.hpp"

namespace twolevel::cli {

namespace {

using nlohmann::json;

const std::vector<KeySpec>& model_keys() {
  static const std::vector<KeySpec> keys{
      {"p", KeyType::Double, "probability an arriving job is urgent"},
      {"mu01", KeyType::Double, "urgent service rate at level 1"},
      {"mu11", KeyType::Double, "non-urgent service rate at level 1"},
      {"mu02", KeyType::Double, "urgent service rate at level 2"},
      {"n", KeyType::Int, "level-1 capacity N"},
      {"c2", KeyType::Int, "level-2 capacity (sets r = c2 / n)"},
      {"r", KeyType::Double, "capacity ratio C2 / N"},
  };
  return keys;
}

const std::vector<KeySpec>& init_keys() {
  static const std::vector<KeySpec> keys{
      {"y_star0", KeyType::Double, "initial blocked fraction"},
      {"y0", KeyType::Double, "initial urgent fraction at level 1"},
      {"z0", KeyType::Double, "initial idle fraction at level 2"},
  };
  return keys;
}

std::vector<KeySpec> concat(std::initializer_list<const std::vector<KeySpec>*> parts) {
  std::vector<KeySpec> out;
  for (const auto* part : parts) out.insert(out.end(), part->begin(), part->end());
  return out;
}

json common_model_defaults() {
  return {{"p", 0.5}, {"mu01", 1.0}, {"mu11", 1.0}, {"mu02", 1.0}};
}

json defaults_for(Command command, const std::string& experiment) {
  json d = common_model_defaults();
  switch (command) {
    case Command::Params:
      d.update({{"n", 100}, {"r", 0.3}});
      return d;
    case Command::Simulate:
      d.update({{"n", 100},
                {"r", 0.3},
                {"horizon", 50.0},
                {"replications", 1},
                {"y_star0", 0.0},
                {"y0", 0.0},
                {"z0", 0.0},
                {"process", "main"}});
      return d;
    case Command::Fluid:
      d.update({{"r", 0.3},
                {"horizon", 50.0},
                {"fluid_dt", 1e-3},
                {"grid_dt", 0.01},
                {"y_star0", 0.0},
                {"y0", 0.0},
                {"z0", 0.0},
                {"system", "hybrid"}});
      return d;
    case Command::Experiment:
      break;
  }

  const ExperimentConfig base;
  d.update({{"experiment", experiment},
            {"horizon", 50.0},
            {"burn_in", 10.0},
            {"replications", 20},
            {"grid_dt", base.grid_dt},
            {"fluid_dt", base.fluid_dt},
            {"y_star0", 0.0},
            {"y0", 0.0},
            {"z0", 0.0},
            {"sup_threshold", base.sup_threshold},
            {"probability_floor", base.probability_floor},
            {"band", base.band},
            {"phase_zero_level", base.phase_zero_level},
            {"phase_band", base.phase_band},
            {"slope_low", base.slope_low},
            {"slope_high", base.slope_high}});
  const json sweep = json::array({50, 100, 200, 400});
  if (experiment == "convergence-aux-saturated") {
    d.update({{"r", 0.3}, {"n_list", sweep}, {"horizon", 20.0}, {"burn_in", 0.0}});
  } else if (experiment == "convergence-aux-noblock") {
    d.update({{"r", 0.7}, {"n_list", sweep}, {"horizon", 20.0}, {"burn_in", 0.0}});
  } else if (experiment == "convergence-main") {
    d.update({{"r", 0.7}, {"n_list", sweep}});
  } else if (experiment == "no-blocking") {
    d.update({{"r", 0.7}, {"n_list", {100, 400}}, {"replications", 50}});
  } else if (experiment == "saturation") {
    d.update({{"r", 0.3}, {"n_list", {100, 400}}, {"replications", 50}});
  } else if (experiment == "phase-scan") {
    json grid = json::array();
    for (int k = 0; k <= 16; ++k) grid.push_back((10 + 5 * k) / 100.0);
    d.update({{"n_list", {200}}, {"r_grid", grid}});
  } else if (experiment == "oracle-check") {
    d.update({{"n", 2}, {"c2", 1}, {"horizon", 1e4}});
  } else if (experiment == "martingale-decay") {
    d.update({{"r", 0.3},
              {"n_list", {100, 200, 400, 800}},
              {"replications", 50},
              {"horizon", 10.0},
              {"burn_in", 0.0}});
  }
  return d;
}

bool matches(const json& value, KeyType type) {
  switch (type) {
    case KeyType::Double:
      return value.is_number();
    case KeyType::Int:
      return value.is_number_integer();
    case KeyType::Seed:
      return value.is_number_unsigned() || (value.is_number_integer() && value.get<long long>() >= 0);
    case KeyType::String:
      return value.is_string();
    case KeyType::IntList:
      return value.is_array() &&
             std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_number_integer(); });
    case KeyType::DoubleList:
      return value.is_array() &&
             std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_number(); });
  }
  return false;
}

const char* type_name(KeyType type) {
  switch (type) {
    case KeyType::Double:
      return "a number";
    case KeyType::Int:
      return "an integer";
    case KeyType::Seed:
      return "a non-negative integer";
    case KeyType::String:
      return "a string";
    case KeyType::IntList:
      return "a list of integers";
    case KeyType::DoubleList:
      return "a list of numbers";
  }
  return "";
}

void check_keys(Command command, const json& layer, const char* source) {
  if (!layer.is_object()) throw DomainError("config", std::string(source) + " must be a JSON object");
  const auto& keys = keys_for(command);
  for (const auto& [key, value] : layer.items()) {
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.key == key; });
    if (it == keys.end()) throw DomainError(key, std::string("unknown key in ") + source);
    if (!matches(value, it->type)) {
      throw DomainError(key, std::string("must be ") + type_name(it->type));
    }
  }
}

template <class T>
T get(const json& j, const std::string& key) {
  if (!j.contains(key)) throw DomainError(key, "missing");
  return j.at(key).get<T>();
}

}  // namespace

const std::vector<KeySpec>& keys_for(Command command) {
  static const std::vector<KeySpec> simulate_extra{
      {"horizon", KeyType::Double, "simulated time"},
      {"replications", KeyType::Int, "number of independent runs (seeds seed .. seed+k-1)"},
      {"seed", KeyType::Seed, "base random seed (required)"},
      {"process", KeyType::String, "main | aux-saturated | aux-noblock"},
  };
  static const std::vector<KeySpec> fluid_extra{
      {"horizon", KeyType::Double, "integration horizon"},
      {"fluid_dt", KeyType::Double, "integration step"},
      {"grid_dt", KeyType::Double, "output grid step (multiple of fluid_dt)"},
      {"system", KeyType::String, "hybrid | overloaded | underloaded | aux-saturated | aux-noblock"},
  };
  static const std::vector<KeySpec> experiment_extra{
      {"experiment", KeyType::String, "experiment name"},
      {"horizon", KeyType::Double, "simulated time"},
      {"burn_in", KeyType::Double, "start of the observation window"},
      {"replications", KeyType::Int, "replications per N"},
      {"seed", KeyType::Seed, "base random seed (required)"},
      {"grid_dt", KeyType::Double, "comparison grid step"},
      {"fluid_dt", KeyType::Double, "fluid integration step"},
      {"n_list", KeyType::IntList, "level-1 capacities to sweep"},
      {"r_grid", KeyType::DoubleList, "ratios scanned by phase-scan"},
      {"workers", KeyType::Int, "worker threads, 0 = all cores (results do not depend on it)"},
      {"sup_threshold", KeyType::Double, "sup-norm acceptance threshold"},
      {"probability_floor", KeyType::Double, "minimum certificate probability"},
      {"band", KeyType::Double, "tolerance band for limits"},
      {"phase_zero_level", KeyType::Double, "blocked fraction counted as zero"},
      {"phase_band", KeyType::Double, "phase-scan tolerance around the limit"},
      {"slope_low", KeyType::Double, "lowest accepted martingale slope"},
      {"slope_high", KeyType::Double, "highest accepted martingale slope"},
  };
  static const std::vector<KeySpec> params = model_keys();
  static const std::vector<KeySpec> simulate = concat({&model_keys(), &init_keys(), &simulate_extra});
  static const std::vector<KeySpec> fluid = concat({&model_keys(), &init_keys(), &fluid_extra});
  static const std::vector<KeySpec> experiment =
      concat({&model_keys(), &init_keys(), &experiment_extra});
  switch (command) {
    case Command::Params:
      return params;
    case Command::Simulate:
      return simulate;
    case Command::Fluid:
      return fluid;
    case Command::Experiment:
      return experiment;
  }
  return params;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "convergence-aux-saturated", "convergence-aux-noblock", "convergence-main", "no-blocking",
      "saturation",                "phase-scan",              "oracle-check",     "martingale-decay"};
  return names;
}

const std::vector<std::string>& fluid_system_names() {
  static const std::vector<std::string> names{"hybrid", "overloaded", "underloaded",
                                              "aux-saturated", "aux-noblock"};
  return names;
}

nlohmann::json effective_config(Command command, const nlohmann::json& file,
                                const nlohmann::json& flags) {
  check_keys(command, file, "config file");
  check_keys(command, flags, "flags");

  std::string experiment;
  if (command == Command::Experiment) {
    if (flags.contains("experiment")) {
      experiment = flags["experiment"].get<std::string>();
    } else if (file.contains("experiment")) {
      experiment = file["experiment"].get<std::string>();
    } else {
      throw DomainError("experiment", "no experiment named");
    }
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
      std::string valid;
      for (const auto& name : names) valid += (valid.empty() ? "" : ", ") + name;
      throw DomainError("experiment", "unknown experiment '" + experiment + "'; valid: " + valid);
    }
  }

  json merged = defaults_for(command, experiment);
  merged.update(file);
  merged.update(flags);

  if (merged.contains("c2")) {
    if (!merged.contains("n")) throw DomainError("c2", "needs n");
    const int n = merged["n"].get<int>();
    if (n < 1) throw DomainError("n", "must be >= 1");
    merged["r"] = static_cast<double>(merged["c2"].get<int>()) / n;
  }
  return merged;
}

RunConfig parse_run_config(Command command, const nlohmann::json& effective) {
  RunConfig cfg;
  cfg.params = {get<double>(effective, "p"), get<double>(effective, "mu01"),
                get<double>(effective, "mu11"), get<double>(effective, "mu02")};
  validate(cfg.params);

  if (effective.contains("r")) {
    cfg.r = get<double>(effective, "r");
    if (!(cfg.r > 0.0) || !std::isfinite(cfg.r)) throw DomainError("r", "must be > 0");
  }
  if (effective.contains("n")) {
    cfg.n = get<int>(effective, "n");
    cfg.c2 = effective.contains("c2") ? get<int>(effective, "c2") : level2_capacity(cfg.r, cfg.n);
    validate(ScalingParams{cfg.n, cfg.c2});
  }

  const auto number = [&](const char* key, double& into) {
    if (effective.contains(key)) into = get<double>(effective, key);
  };
  number("horizon", cfg.horizon);
  number("burn_in", cfg.burn_in);
  number("grid_dt", cfg.grid_dt);
  number("fluid_dt", cfg.fluid_dt);
  number("y_star0", cfg.init.y_star);
  number("y0", cfg.init.y);
  number("z0", cfg.init.z);
  number("sup_threshold", cfg.thresholds.sup_threshold);
  number("probability_floor", cfg.thresholds.probability_floor);
  number("band", cfg.thresholds.band);
  number("phase_zero_level", cfg.thresholds.phase_zero_level);
  number("phase_band", cfg.thresholds.phase_band);
  number("slope_low", cfg.thresholds.slope_low);
  number("slope_high", cfg.thresholds.slope_high);
  if (effective.contains("replications")) {
    cfg.replications = get<int>(effective, "replications");
    if (cfg.replications < 1) throw DomainError("replications", "must be >= 1");
  }
  if (effective.contains("workers")) {
    cfg.workers = get<int>(effective, "workers");
    if (cfg.workers < 0) throw DomainError("workers", "must be >= 0");
  }
  if (effective.contains("seed")) cfg.seed = get<std::uint64_t>(effective, "seed");
  if (effective.contains("n_list")) cfg.n_list = get<std::vector<int>>(effective, "n_list");
  if (effective.contains("r_grid")) cfg.r_grid = get<std::vector<double>>(effective, "r_grid");
  if (effective.contains("experiment")) cfg.experiment = get<std::string>(effective, "experiment");

  if (effective.contains("process")) {
    const auto name = get<std::string>(effective, "process");
    const auto process = parse_process(name);
    if (!process) throw DomainError("process", "unknown process '" + name + "'; valid: main, aux-saturated, aux-noblock");
    cfg.process = *process;
  }
  if (effective.contains("system")) {
    cfg.system = get<std::string>(effective, "system");
    const auto& names = fluid_system_names();
    if (std::find(names.begin(), names.end(), cfg.system) == names.end()) {
      throw DomainError("system", "unknown system '" + cfg.system +
                                      "'; valid: hybrid, overloaded, underloaded, aux-saturated, aux-noblock");
    }
  }

  if ((command == Command::Simulate || command == Command::Experiment) && !cfg.seed) {
    throw DomainError("seed", "--seed is required");
  }
  if (!(cfg.horizon >= 0.0) || !std::isfinite(cfg.horizon)) {
    throw DomainError("horizon", "must be finite and >= 0");
  }
  return cfg;
}

ExperimentConfig to_experiment_config(const RunConfig& cfg) {
  ExperimentConfig out = cfg.thresholds;
  out.params = cfg.params;
  out.r = cfg.r;
  out.n_list = cfg.n_list;
  out.horizon = cfg.horizon;
  out.burn_in = cfg.burn_in;
  out.replications = cfg.replications;
  out.base_seed = cfg.seed.value_or(0);
  out.grid_dt = cfg.grid_dt;
  out.fluid_dt = cfg.fluid_dt;
  out.init = cfg.init;
  out.workers = cfg.workers;
  return out;
}

}  // namespace twolevel::cli
