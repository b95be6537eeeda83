#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "run_config.hpp"
#include "twolevel/ctmc.hpp"
#include "twolevel/errors.hpp"
#include "twolevel/experiments.hpp"
#include "twolevel/fluid.hpp"
#include "twolevel/model.hpp"
#include "twolevel/report.hpp"

namespace twolevel::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Command-line flags that were given, as a JSON layer.
struct FlagLayer {
  std::vector<std::function<void(json&)>> collect;

  template <class T>
  void bind(CLI::App* app, const KeySpec& spec) {
    auto value = std::make_shared<T>();
    std::string flag = "--" + spec.key;
    for (char& c : flag) {
      if (c == '_') c = '-';
    }
    CLI::Option* opt = app->add_option(flag, *value, spec.help);
    collect.push_back([value, opt, key = spec.key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
  }

  void bind_all(CLI::App* app, Command command) {
    for (const KeySpec& spec : keys_for(command)) {
      switch (spec.type) {
        case KeyType::Double:
          bind<double>(app, spec);
          break;
        case KeyType::Int:
          bind<int>(app, spec);
          break;
        case KeyType::Seed:
          bind<std::uint64_t>(app, spec);
          break;
        case KeyType::String:
          bind<std::string>(app, spec);
          break;
        case KeyType::IntList:
          bind<std::vector<int>>(app, spec);
          break;
        case KeyType::DoubleList:
          bind<std::vector<double>>(app, spec);
          break;
      }
    }
  }

  json layer() const {
    json j = json::object();
    for (const auto& f : collect) f(j);
    return j;
  }
};

struct Subcommand {
  Command command;
  CLI::App* app = nullptr;
  FlagLayer flags;
  std::string config_path;
  std::string out_dir;
  bool dump = false;
};

json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError("config", std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

fs::path output_dir(const std::string& flag) {
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("TWOLEVEL_OUT");
    dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("output directory " + dir.string() + " is not writable");
  return dir;
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  writer(os);
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

std::string seed_suffix(std::uint64_t seed) { return "_seed" + std::to_string(seed); }

int cmd_params(const RunConfig& cfg, std::ostream& out) {
  const double rc = critical_ratio(cfg.params);
  const Regime regime = classify_regime(cfg.params, cfg.r);
  out << "p = " << format_number(cfg.params.p) << '\n'
      << "mu01 = " << format_number(cfg.params.mu01) << '\n'
      << "mu11 = " << format_number(cfg.params.mu11) << '\n'
      << "mu02 = " << format_number(cfg.params.mu02) << '\n'
      << "n = " << cfg.n << '\n'
      << "c2 = " << cfg.c2 << '\n'
      << "r = " << format_number(cfg.r) << '\n'
      << "r_c = " << format_number(rc) << '\n'
      << "regime = " << to_string(regime) << '\n';
  switch (regime) {
    case Regime::Overloaded: {
      out << "blocked_fraction_limit = " << format_number(blocked_fraction_limit(cfg.params, cfg.r))
          << '\n';
      if (cfg.params.p > 0.0) {
        const OverloadedPoint fp = overloaded_fixed_point(cfg.params, cfg.r);
        out << "fixed_point.y_star = " << format_number(fp.y_star) << '\n'
            << "fixed_point.y = " << format_number(fp.y) << '\n'
            << "fixed_point.z = 0\n";
      }
      break;
    }
    case Regime::Underloaded: {
      const UnderloadedPoint fp = underloaded_fixed_point(cfg.params, cfg.r);
      out << "blocked_fraction_limit = 0\n"
          << "fixed_point.y_star = 0\n"
          << "fixed_point.y = " << format_number(fp.y) << '\n'
          << "fixed_point.z = " << format_number(fp.z) << '\n';
      break;
    }
    case Regime::Critical:
      out << "fixed_point = omitted (r equals r_c: neither regime applies and the limit is not "
             "characterized)\n";
      break;
  }
  out << "min_c2_without_congestion = " << min_c2_without_congestion(cfg.params, cfg.n) << '\n';
  return kExitPass;
}

int cmd_simulate(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const ScalingParams scaling{cfg.n, cfg.c2};
  const MicroState init = micro_from_fluid(cfg.init, scaling, cfg.process);
  const std::uint64_t base = *cfg.seed;
  const std::string process(to_string(cfg.process));

  json runs = json::array();
  for (int i = 0; i < cfg.replications; ++i) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(i);
    const Trajectory traj = simulate(init, cfg.params, scaling, cfg.horizon, seed, cfg.process);
    const std::string name = "trajectory_" + process + seed_suffix(seed) + ".csv";
    write_file(dir / name, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    runs.push_back({{"seed", seed},
                    {"file", name},
                    {"events", traj.event_count},
                    {"absorbed", traj.absorbed},
                    {"events_truncated", traj.events_truncated}});
    out << name << '\n';
  }
  const json manifest{{"process", process},
                      {"p", cfg.params.p},
                      {"mu01", cfg.params.mu01},
                      {"mu11", cfg.params.mu11},
                      {"mu02", cfg.params.mu02},
                      {"n", cfg.n},
                      {"c2", cfg.c2},
                      {"horizon", cfg.horizon},
                      {"initial_state", {init.y_star, init.y, init.z}},
                      {"seeds", {base, base + static_cast<std::uint64_t>(cfg.replications) - 1}},
                      {"runs", runs}};
  const std::string manifest_name = "simulate_" + process + seed_suffix(base) + ".json";
  write_file(dir / manifest_name, [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  out << manifest_name << '\n';
  return kExitPass;
}

void require(const RunConfig& cfg, Regime wanted) {
  const Regime got = classify_regime(cfg.params, cfg.r);
  if (got != wanted) {
    throw RegimeMismatch("system '" + cfg.system + "' needs the " + std::string(to_string(wanted)) +
                         " regime but r = " + format_number(cfg.r) + " is " +
                         std::string(to_string(got)));
  }
}

int cmd_fluid(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  VectorPath path;
  SampledPath regulator;
  const ModelParams& mp = cfg.params;
  if (cfg.system == "hybrid") {
    validate(cfg.init, cfg.r);
    path = hybrid_fluid(mp, cfg.r, cfg.init, cfg.horizon, cfg.fluid_dt);
  } else if (cfg.system == "overloaded") {
    require(cfg, Regime::Overloaded);
    const std::vector<double> x0{cfg.init.y_star, cfg.init.y};
    const VectorPath two = integrate(
        [&](double, std::span<const double> x, std::span<double> dx) {
          const FluidDerivative d = overloaded_rhs(x[0], x[1], mp, cfg.r);
          dx[0] = d.d_y_star;
          dx[1] = d.d_y;
        },
        x0, cfg.horizon, cfg.fluid_dt);
    path = VectorPath(two.t0(), two.dt(), 3);
    for (std::size_t k = 0; k < two.size(); ++k) {
      const std::array<double, 3> row{two.at(k, 0), two.at(k, 1), 0.0};
      path.push_back(row);
    }
  } else if (cfg.system == "underloaded") {
    require(cfg, Regime::Underloaded);
    const std::vector<double> x0{cfg.init.y, cfg.init.z};
    const VectorPath two = integrate(
        [&](double, std::span<const double> x, std::span<double> dx) {
          const FluidDerivative d = underloaded_rhs(x[0], x[1], mp, cfg.r);
          dx[0] = d.d_y;
          dx[1] = d.d_z;
        },
        x0, cfg.horizon, cfg.fluid_dt);
    path = VectorPath(two.t0(), two.dt(), 3);
    for (std::size_t k = 0; k < two.size(); ++k) {
      const std::array<double, 3> row{0.0, two.at(k, 0), two.at(k, 1)};
      path.push_back(row);
    }
  } else {
    ReflectedSolution sol =
        cfg.system == "aux-saturated"
            ? aux_saturated_fluid(mp, cfg.r, cfg.init.y_star, cfg.init.y, cfg.horizon, cfg.fluid_dt)
            : aux_noblock_fluid(mp, cfg.r, cfg.init.y, cfg.init.z, cfg.horizon, cfg.fluid_dt);
    path = std::move(sol.path);
    regulator = std::move(sol.regulator);
  }

  const double ratio = cfg.grid_dt / cfg.fluid_dt;
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-6) {
    throw DomainError("grid_dt", "must be an integer multiple of fluid_dt");
  }
  const std::string name = "fluid_" + cfg.system + ".csv";
  write_file(dir / name, [&](std::ostream& os) {
    os << "t,y_star,y,z,u\n";
    for (std::size_t k = 0; k < path.size(); k += stride) {
      const double u = regulator.values.empty() ? 0.0 : regulator[k];
      os << format_number(path.time(k)) << ',' << format_number(path.at(k, kYStar)) << ','
         << format_number(path.at(k, kY)) << ',' << format_number(path.at(k, kZ)) << ','
         << format_number(u) << '\n';
    }
  });
  out << name << '\n';
  return kExitPass;
}

int cmd_experiment(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const ExperimentConfig ec = to_experiment_config(cfg);
  const std::string& name = cfg.experiment;
  Report report;
  if (name == "convergence-aux-saturated") {
    report = convergence_sweep(ec, Process::AuxSaturated);
  } else if (name == "convergence-aux-noblock") {
    report = convergence_sweep(ec, Process::AuxNoBlock);
  } else if (name == "convergence-main") {
    report = convergence_sweep(ec, Process::Main);
  } else if (name == "no-blocking") {
    report = no_blocking_certificate(ec);
  } else if (name == "saturation") {
    report = saturation_certificate(ec);
  } else if (name == "phase-scan") {
    report = phase_scan(ec, cfg.r_grid);
  } else if (name == "oracle-check") {
    report = oracle_cross_check(cfg.params, {cfg.n, cfg.c2}, cfg.horizon, *cfg.seed);
  } else {
    report = martingale_decay(ec);
  }

  const std::string stem = name + seed_suffix(*cfg.seed);
  write_file(dir / (stem + ".json"), [&](std::ostream& os) { os << report.to_json().dump(2) << '\n'; });
  write_file(dir / (stem + ".csv"), [&](std::ostream& os) { report.write_csv(os); });
  for (const Criterion& c : report.criteria) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  }
  out << "verdict: " << (report.pass() ? "pass" : "fail") << '\n'
      << stem << ".json\n"
      << stem << ".csv\n";
  return report.pass() ? kExitPass : kExitFail;
}

Subcommand& add_subcommand(CLI::App& app, std::vector<std::unique_ptr<Subcommand>>& subs,
                           Command command, const std::string& name, const std::string& help,
                           bool writes_files) {
  auto sub = std::make_unique<Subcommand>();
  sub->command = command;
  sub->app = app.add_subcommand(name, help);
  sub->app->add_option("--config", sub->config_path, "flat JSON config file; flags override it");
  sub->app->add_flag("--dump-config", sub->dump, "print the effective config as JSON and exit");
  if (writes_files) {
    sub->app->add_option("--out", sub->out_dir, "output directory (default: $TWOLEVEL_OUT or .)");
  }
  sub->flags.bind_all(sub->app, command);
  subs.push_back(std::move(sub));
  return *subs.back();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-level blocking network: fluid limits, simulation and exact oracles", "twolevel"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Subcommand>> subs;
  add_subcommand(app, subs, Command::Params, "params", "regime, critical ratio and fixed point", false);
  add_subcommand(app, subs, Command::Simulate, "simulate", "exact trajectories as CSV", true);
  add_subcommand(app, subs, Command::Fluid, "fluid", "fluid path as CSV", true);
  add_subcommand(app, subs, Command::Experiment, "experiment", "run a named experiment", true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream cli_out;
    std::ostringstream cli_err;
    const int code = app.exit(e, cli_out, cli_err);
    out << cli_out.str();
    err << cli_err.str();
    return code == 0 ? kExitPass : kExitConfig;
  }

  Subcommand* active = nullptr;
  for (auto& sub : subs) {
    if (sub->app->parsed()) active = sub.get();
  }

  try {
    const json effective =
        effective_config(active->command, read_config_file(active->config_path), active->flags.layer());
    const RunConfig cfg = parse_run_config(active->command, effective);
    if (active->dump) {
      out << effective.dump(2) << '\n';
      return kExitPass;
    }
    switch (active->command) {
      case Command::Params:
        return cmd_params(cfg, out);
      case Command::Simulate:
        return cmd_simulate(cfg, output_dir(active->out_dir), out);
      case Command::Fluid:
        return cmd_fluid(cfg, output_dir(active->out_dir), out);
      case Command::Experiment:
        return cmd_experiment(cfg, output_dir(active->out_dir), out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitFail;
}

}  // namespace twolevel::cli
