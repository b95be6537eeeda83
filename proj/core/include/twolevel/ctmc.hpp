#pragma once

// Exact (jump-chain) simulation of the two-level network and of its two
// auxiliary processes.
//
// Every process is expressed on the same integer triple (y*, y, z):
//  - Main: the full network on S_N.
//  - AuxSaturated: level 2 permanently full; z is always 0.
//  - AuxNoBlock: urgent jobs finding level 2 full leave; y* is always 0.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "twolevel/model.hpp"
#include "twolevel/path.hpp"

namespace twolevel {

struct MicroState {
  int y_star = 0;  // blocked class-0 jobs at level 1
  int y = 0;       // class-0 jobs in service at level 1
  int z = 0;       // idle servers at level 2

  friend bool operator==(const MicroState&, const MicroState&) = default;
  friend auto operator<=>(const MicroState&, const MicroState&) = default;
};

std::ostream& operator<<(std::ostream& os, const MicroState& s);

enum class Process { Main, AuxSaturated, AuxNoBlock };

std::string_view to_string(Process process);
std::optional<Process> parse_process(std::string_view name);

// Throws InvalidState unless the state belongs to the state space of
// `process` for the given capacities.
void validate_state(const MicroState& s, const ScalingParams& scaling,
                    Process process = Process::Main);

struct Transition {
  std::array<int, 3> delta{};  // change in (y*, y, z)
  double rate = 0.0;

  MicroState apply(const MicroState& s) const {
    return {s.y_star + delta[0], s.y + delta[1], s.z + delta[2]};
  }
};

// At most seven clauses are ever enabled; stored inline.
class TransitionList {
 public:
  static constexpr std::size_t kCapacity = 7;

  void push(std::array<int, 3> delta, double rate) {
    if (rate > 0.0) items_[size_++] = Transition{delta, rate};
  }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  const Transition* begin() const { return items_.data(); }
  const Transition* end() const { return items_.data() + size_; }
  double total_rate() const;

 private:
  std::array<Transition, kCapacity> items_{};
  std::size_t size_ = 0;
};

// Transitions with positive rate out of `state` (validated).
TransitionList enabled_transitions(const MicroState& state, const ModelParams& params,
                                   const ScalingParams& scaling, Process process = Process::Main);

// Seeded source of randomness. Uniforms and exponentials are derived from the
// raw 64-bit engine output so runs are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0, 1).
  double uniform();
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

struct Step {
  double holding;
  MicroState next;
};

// One jump of the embedded chain. Returns nullopt when the state is
// absorbing.
std::optional<Step> step(const MicroState& state, Rng& rng, const ModelParams& params,
                         const ScalingParams& scaling, Process process = Process::Main);

struct Event {
  double t;
  MicroState state;
};

struct Trajectory {
  Process process = Process::Main;
  MicroState initial;
  std::vector<Event> events;  // strictly increasing times, all <= horizon
  double horizon = 0.0;
  std::uint64_t seed = 0;
  bool absorbed = false;          // run ended in an absorbing state
  bool events_truncated = false;  // event cap reached; see `sampled`
  std::size_t event_count = 0;    // all jumps, stored or not
  // Grid samples recorded during the run when SimulateOptions::sample_dt > 0.
  std::optional<VectorPath> sampled;

  // State in force at time t (right-continuous).
  MicroState state_at(double t) const;
};

struct SimulateOptions {
  std::size_t max_events = 10'000'000;
  double sample_dt = 0.0;  // > 0: also record the counts on this grid
};

Trajectory simulate(const MicroState& init, const ModelParams& params, const ScalingParams& scaling,
                    double horizon, std::uint64_t seed, Process process = Process::Main,
                    const SimulateOptions& options = {});

// Wrappers for the auxiliary processes; the absent coordinate is fixed at 0.
Trajectory simulate_aux_saturated(int y_star, int y, const ModelParams& params,
                                  const ScalingParams& scaling, double horizon, std::uint64_t seed,
                                  const SimulateOptions& options = {});
Trajectory simulate_aux_noblock(int y, int z, const ModelParams& params,
                                const ScalingParams& scaling, double horizon, std::uint64_t seed,
                                const SimulateOptions& options = {});

// (y*, y, z) / N sampled on the grid 0, grid_dt, ..., <= horizon.
VectorPath rescale(const Trajectory& traj, const ScalingParams& scaling, double grid_dt);

// Rescaled drift of the main process (compensator density of y*, y, z).
std::array<double, 3> main_drift(const MicroState& s, const ModelParams& params,
                                 const ScalingParams& scaling);

// M_V(t) = V(t)/N - V(0)/N - int_0^t drift_V, for V in (y*, y, z), sampled on
// the grid. Integrals are exact over the piecewise-constant path.
VectorPath martingale_residual(const Trajectory& traj, const ModelParams& params,
                               const ScalingParams& scaling, double grid_dt);

// Header `t,y_star,y,z`, initial row at t = 0, one row per event. Times carry
// 9 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// Integer counts nearest to N * fluid, clipped into the process state space.
MicroState micro_from_fluid(const FluidState& x, const ScalingParams& scaling,
                            Process process = Process::Main);

}  // namespace twolevel
