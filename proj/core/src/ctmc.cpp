#include "twolevel/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "twolevel/errors.hpp"

namespace twolevel {

std::ostream& operator<<(std::ostream& os, const MicroState& s) {
  return os << '(' << s.y_star << ',' << s.y << ',' << s.z << ')';
}

std::string_view to_string(Process process) {
  switch (process) {
    case Process::Main:
      return "main";
    case Process::AuxSaturated:
      return "aux-saturated";
    case Process::AuxNoBlock:
      return "aux-noblock";
  }
  return "unknown";
}

std::optional<Process> parse_process(std::string_view name) {
  for (Process p : {Process::Main, Process::AuxSaturated, Process::AuxNoBlock}) {
    if (name == to_string(p)) return p;
  }
  return std::nullopt;
}

namespace {

std::string describe(const MicroState& s) {
  return "(" + std::to_string(s.y_star) + "," + std::to_string(s.y) + "," + std::to_string(s.z) +
         ")";
}

}  // namespace

void validate_state(const MicroState& s, const ScalingParams& scaling, Process process) {
  const auto fail = [&](const char* why) {
    throw InvalidState("state " + describe(s) + " for process " + std::string(to_string(process)) +
                       ": " + why);
  };
  if (s.y_star < 0 || s.y < 0 || s.z < 0) fail("negative coordinate");
  if (s.y_star + s.y > scaling.n) fail("y* + y exceeds C1");
  if (s.z > scaling.c2) fail("z exceeds C2");
  switch (process) {
    case Process::Main:
      if (s.y_star > 0 && s.z > 0) fail("y* and z cannot both be positive");
      break;
    case Process::AuxSaturated:
      if (s.z != 0) fail("saturated auxiliary process has no idle level-2 servers");
      break;
    case Process::AuxNoBlock:
      if (s.y_star != 0) fail("no-blocking auxiliary process has no blocked jobs");
      break;
  }
}

double TransitionList::total_rate() const {
  double total = 0.0;
  for (const Transition& t : *this) total += t.rate;
  return total;
}

TransitionList enabled_transitions(const MicroState& s, const ModelParams& params,
                                   const ScalingParams& scaling, Process process) {
  validate_state(s, scaling, process);
  const double p = params.p;
  const double y = s.y;
  const double c2 = scaling.c2;
  const double free_level1 = scaling.n - s.y_star - s.y;
  TransitionList out;
  switch (process) {
    case Process::Main:
      if (s.z == 0) {
        out.push({1, -1, 0}, params.mu01 * y);
      } else {
        out.push({0, -1, -1}, params.mu01 * y * (1.0 - p));
        out.push({0, 0, -1}, params.mu01 * y * p);
      }
      out.push({0, 1, 0}, params.mu11 * p * free_level1);
      if (s.y_star > 0) {
        out.push({-1, 0, 0}, (1.0 - p) * params.mu02 * c2);
        out.push({-1, 1, 0}, p * params.mu02 * c2);
      } else {
        out.push({0, 0, 1}, params.mu02 * (c2 - s.z));
      }
      break;
    case Process::AuxSaturated:
      out.push({1, -1, 0}, params.mu01 * y);
      if (s.y_star > 0) {
        out.push({-1, 0, 0}, (1.0 - p) * params.mu02 * c2);
        out.push({-1, 1, 0}, p * params.mu02 * c2);
      }
      out.push({0, 1, 0}, p * params.mu11 * free_level1);
      break;
    case Process::AuxNoBlock:
      if (s.z == 0) {
        // Urgent completions leave; only a class-1 replacement changes y.
        out.push({0, -1, 0}, (1.0 - p) * params.mu01 * y);
      } else {
        out.push({0, -1, -1}, (1.0 - p) * params.mu01 * y);
        out.push({0, 0, -1}, p * params.mu01 * y);
      }
      out.push({0, 1, 0}, p * params.mu11 * (scaling.n - s.y));
      out.push({0, 0, 1}, params.mu02 * (c2 - s.z));
      break;
  }
  return out;
}

double Rng::uniform() {
  // 53 random bits, shifted off both endpoints.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

std::optional<Step> step(const MicroState& state, Rng& rng, const ModelParams& params,
                         const ScalingParams& scaling, Process process) {
  const TransitionList transitions = enabled_transitions(state, params, scaling, process);
  if (transitions.empty()) return std::nullopt;
  const double total = transitions.total_rate();
  const double holding = rng.exponential(total);
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  for (const Transition& t : transitions) {
    cumulative += t.rate;
    if (target < cumulative) return Step{holding, t.apply(state)};
  }
  return Step{holding, transitions[transitions.size() - 1].apply(state)};
}

MicroState Trajectory::state_at(double t) const {
  auto it = std::upper_bound(events.begin(), events.end(), t,
                             [](double value, const Event& e) { return value < e.t; });
  return it == events.begin() ? initial : std::prev(it)->state;
}

namespace {

void record_samples(VectorPath& grid, const MicroState& s, double until, double horizon,
                    bool inclusive) {
  for (;;) {
    const double t = grid.time(grid.size());
    if (t > horizon + 1e-9 * grid.dt()) return;
    if (inclusive ? t > until : t >= until) return;
    grid.push_back(std::array{static_cast<double>(s.y_star), static_cast<double>(s.y),
                              static_cast<double>(s.z)});
  }
}

}  // namespace

Trajectory simulate(const MicroState& init, const ModelParams& params, const ScalingParams& scaling,
                    double horizon, std::uint64_t seed, Process process,
                    const SimulateOptions& options) {
  validate(params, scaling);
  validate_state(init, scaling, process);
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw DomainError("horizon", "horizon must be finite and >= 0");
  }

  Trajectory traj;
  traj.process = process;
  traj.initial = init;
  traj.horizon = horizon;
  traj.seed = seed;
  if (options.sample_dt > 0.0) traj.sampled.emplace(0.0, options.sample_dt, 3);

  Rng rng(seed);
  MicroState current = init;
  double t = 0.0;
  while (true) {
    const std::optional<Step> next = step(current, rng, params, scaling, process);
    if (!next) {
      traj.absorbed = true;
      break;
    }
    const double t_next = t + next->holding;
    if (t_next > horizon) break;
    if (traj.sampled) record_samples(*traj.sampled, current, t_next, horizon, false);
    t = t_next;
    current = next->next;
    ++traj.event_count;
    if (traj.events.size() < options.max_events) {
      traj.events.push_back({t, current});
    } else {
      traj.events_truncated = true;
    }
  }
  if (traj.sampled) record_samples(*traj.sampled, current, horizon, horizon, true);
  return traj;
}

Trajectory simulate_aux_saturated(int y_star, int y, const ModelParams& params,
                                  const ScalingParams& scaling, double horizon, std::uint64_t seed,
                                  const SimulateOptions& options) {
  return simulate({y_star, y, 0}, params, scaling, horizon, seed, Process::AuxSaturated, options);
}

Trajectory simulate_aux_noblock(int y, int z, const ModelParams& params,
                                const ScalingParams& scaling, double horizon, std::uint64_t seed,
                                const SimulateOptions& options) {
  return simulate({0, y, z}, params, scaling, horizon, seed, Process::AuxNoBlock, options);
}

VectorPath rescale(const Trajectory& traj, const ScalingParams& scaling, double grid_dt) {
  if (!(grid_dt > 0.0)) throw DomainError("grid_dt", "grid step must be > 0");
  validate(scaling);
  const double n = scaling.n;
  if (traj.events_truncated) {
    if (!traj.sampled || traj.sampled->dt() != grid_dt) {
      throw GridMismatch("event list truncated and no recorded samples on this grid");
    }
    VectorPath out(0.0, grid_dt, 3);
    for (std::size_t k = 0; k < traj.sampled->size(); ++k) {
      const auto row = traj.sampled->row(k);
      out.push_back(std::array{row[0] / n, row[1] / n, row[2] / n});
    }
    return out;
  }

  const std::size_t steps = grid_steps(traj.horizon, grid_dt);
  VectorPath out(0.0, grid_dt, 3);
  std::size_t next_event = 0;
  MicroState current = traj.initial;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = out.time(k);
    while (next_event < traj.events.size() && traj.events[next_event].t <= t) {
      current = traj.events[next_event++].state;
    }
    out.push_back(std::array{current.y_star / n, current.y / n, current.z / n});
  }
  return out;
}

std::array<double, 3> main_drift(const MicroState& s, const ModelParams& params,
                                 const ScalingParams& scaling) {
  const double n = scaling.n;
  const double ys = s.y_star / n;
  const double y = s.y / n;
  const double z = s.z / n;
  const double ratio = scaling.c2 / n;
  const double idle = s.z > 0 ? 1.0 : 0.0;
  const double blocked = s.y_star > 0 ? 1.0 : 0.0;
  return {
      params.mu01 * y * (1.0 - idle) - params.mu02 * ratio * blocked,
      -params.mu01 * y * (1.0 - params.p * idle) + params.p * params.mu02 * ratio * blocked +
          params.p * params.mu11 * (1.0 - ys - y),
      -params.mu01 * y * idle + params.mu02 * (ratio - z) * (1.0 - blocked),
  };
}

VectorPath martingale_residual(const Trajectory& traj, const ModelParams& params,
                               const ScalingParams& scaling, double grid_dt) {
  if (!(grid_dt > 0.0)) throw DomainError("grid_dt", "grid step must be > 0");
  if (traj.process != Process::Main) {
    throw InvalidState("martingale residual is defined for the main process");
  }
  if (traj.events_truncated) throw InvalidState("martingale residual needs the full event list");
  validate(params, scaling);
  const double n = scaling.n;
  const std::size_t steps = grid_steps(traj.horizon, grid_dt);

  VectorPath out(0.0, grid_dt, 3);
  std::array<double, 3> compensator{};  // integral of the drift up to t_last
  MicroState current = traj.initial;
  double t_last = 0.0;
  std::size_t next_event = 0;
  const std::array<double, 3> start{traj.initial.y_star / n, traj.initial.y / n,
                                    traj.initial.z / n};

  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = out.time(k);
    while (next_event < traj.events.size() && traj.events[next_event].t <= t) {
      const Event& e = traj.events[next_event++];
      const auto drift = main_drift(current, params, scaling);
      for (std::size_t c = 0; c < 3; ++c) compensator[c] += drift[c] * (e.t - t_last);
      t_last = e.t;
      current = e.state;
    }
    const auto drift = main_drift(current, params, scaling);
    const std::array<double, 3> value{current.y_star / n, current.y / n, current.z / n};
    std::array<double, 3> row{};
    for (std::size_t c = 0; c < 3; ++c) {
      row[c] = value[c] - start[c] - compensator[c] - drift[c] * (t - t_last);
    }
    out.push_back(row);
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  char buffer[96];
  os << "t,y_star,y,z\n";
  const auto row = [&](double t, const MicroState& s) {
    std::snprintf(buffer, sizeof buffer, "%.9g,%d,%d,%d\n", t, s.y_star, s.y, s.z);
    os << buffer;
  };
  row(0.0, traj.initial);
  for (const Event& e : traj.events) row(e.t, e.state);
}

MicroState micro_from_fluid(const FluidState& x, const ScalingParams& scaling, Process process) {
  const auto count = [&](double fraction, int cap) {
    return std::clamp(static_cast<int>(std::lround(fraction * scaling.n)), 0, cap);
  };
  MicroState s{count(x.y_star, scaling.n), count(x.y, scaling.n), count(x.z, scaling.c2)};
  if (process == Process::AuxSaturated) s.z = 0;
  if (process == Process::AuxNoBlock) s.y_star = 0;
  if (s.y_star > 0) s.z = 0;
  s.y = std::min(s.y, scaling.n - s.y_star);
  return s;
}

}  // namespace twolevel
