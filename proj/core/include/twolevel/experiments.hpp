#pragma once

// Desk-scale statistical certificates for the fluid-limit theorems. Every
// experiment is a pure function of its configuration: replication i uses seed
// base_seed + i, and replications run on a worker pool whose size does not
// affect the report.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "twolevel/ctmc.hpp"
#include "twolevel/model.hpp"
#include "twolevel/report.hpp"

namespace twolevel {

struct ExperimentConfig {
  ModelParams params;
  double r = 0.3;
  std::vector<int> n_list{50, 100, 200, 400};
  double horizon = 50.0;
  double burn_in = 10.0;  // t1: start of the observation window
  int replications = 20;
  std::uint64_t base_seed = 1;
  double grid_dt = 0.01;
  double fluid_dt = 1e-3;
  FluidState init{};  // initial fluid state, rounded to counts per N
  int workers = 0;    // 0 = one per hardware thread; never affects results

  // Acceptance floors.
  double sup_threshold = 0.08;
  double probability_floor = 0.9;
  double band = 0.05;
  double phase_zero_level = 0.02;
  double phase_band = 0.07;
  double slope_low = -0.7;
  double slope_high = -0.3;
};

void validate(const ExperimentConfig& cfg);

// Echo of every result-relevant field (workers excluded).
nlohmann::json to_json(const ExperimentConfig& cfg);

// C2 for level-1 capacity n at ratio r: round(r n), at least 1.
int level2_capacity(double r, int n);

// Rescaled simulation vs fluid path, sup-norm on [burn_in, horizon]:
//  - Main against hybrid_fluid (all three coordinates),
//  - AuxSaturated against aux_saturated_fluid (y*, y),
//  - AuxNoBlock against aux_noblock_fluid (y, z).
Report convergence_sweep(const ExperimentConfig& cfg, Process target);

// Underloaded regime: probability that no job is blocked on the window, and
// distance of (y, z) to the underloaded fixed point.
Report no_blocking_certificate(const ExperimentConfig& cfg);

// Overloaded regime: probability that level 2 has no idle server on the
// window, time-average blocked fraction, and the lower bound on y* + y.
Report saturation_certificate(const ExperimentConfig& cfg);

// Time-average blocked fraction over a sorted grid of ratios at
// N = cfg.n_list.back(); the blocking threshold estimate is the first ratio
// whose value drops below cfg.phase_zero_level.
Report phase_scan(const ExperimentConfig& cfg, std::span<const double> r_grid);

// Long-run simulation averages vs exact stationary moments (N, C2 small).
Report oracle_cross_check(const ModelParams& params, const ScalingParams& scaling, double horizon,
                          std::uint64_t seed);

// RMS over replications of sup_t |M_V| per N and the log-log slope vs N.
Report martingale_decay(const ExperimentConfig& cfg);

}  // namespace twolevel
