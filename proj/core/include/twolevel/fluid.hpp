#pragma once

// Deterministic fluid dynamics of the rescaled network.
//
// All reflected solutions are reported as 3-coordinate paths in (y*, y, z)
// order so that every fluid path shares one layout; the auxiliary systems
// leave their absent coordinate at 0.

#include <functional>
#include <span>

#include "twolevel/model.hpp"
#include "twolevel/path.hpp"
#include "twolevel/skorokhod.hpp"

namespace twolevel {

struct FluidDerivative {
  double d_y_star = 0.0;
  double d_y = 0.0;
  double d_z = 0.0;
};

// Saturated regime: dy*/dt = mu01 y - mu02 r,
//                   dy/dt  = -mu01 y + p (mu02 r + mu11 (1 - y* - y)).
FluidDerivative overloaded_rhs(double y_star, double y, const ModelParams& params, double r);

// No-blocking regime: dy/dt = -(p mu11 + (1-p) mu01) y + p mu11,
//                     dz/dt = -mu02 z - mu01 y + mu02 r.
FluidDerivative underloaded_rhs(double y, double z, const ModelParams& params, double r);

using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;

// Classic fixed-step RK4 on [0, horizon]. Throws NonFinite if the state blows
// up.
VectorPath integrate(const OdeRhs& rhs, std::span<const double> init, double horizon, double dt);

struct ReflectedSolution {
  VectorPath path;        // (y*, y, z)
  SampledPath regulator;  // u(t), non-decreasing from 0
};

inline constexpr std::size_t kYStar = 0;
inline constexpr std::size_t kY = 1;
inline constexpr std::size_t kZ = 2;

// Level 2 permanently full. y_a* is reflected at 0; each regulator increment
// du also removes p du from y_a.
ReflectedSolution aux_saturated_fluid(const ModelParams& params, double r, double y_star0,
                                      double y0, double horizon, double dt);

// Blocked urgent jobs leave instead. y_b in closed form, z_b reflected at 0.
ReflectedSolution aux_noblock_fluid(const ModelParams& params, double r, double y0, double z0,
                                    double horizon, double dt);

// Free-process functional of the saturated auxiliary problem:
//   Gbar(x)(t) = G(x)(t) + y*0 + mu01 k(t) e^{-mubar t} - mu02 r t,
//   G(x)(t)    = -p mu01 int_0^t (x(s) + mu11 int_0^s x) e^{-mubar (t-s)} ds,
// with mubar = (1-p) mu01 + p mu11. Integrals use the trapezoidal rule on the
// input grid. Lipschitz rule L(t) = p mu01 (1 + mu11 t).
PathFunctional gbar_functional(const ModelParams& params, double r, double y_star0, double y0);

// Global fluid dynamics on the full domain: drift of the compensator
// equations with indicators resolved from the current state, then projection
// onto y* >= 0, z >= 0, y* z = 0. On the corner y* = z = 0 the surplus
// mu01 y - mu02 r decides which coordinate moves.
VectorPath hybrid_fluid(const ModelParams& params, double r, const FluidState& init, double horizon,
                        double dt);

}  // namespace twolevel
