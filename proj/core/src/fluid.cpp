#include "twolevel/fluid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "twolevel/errors.hpp"

namespace twolevel {

FluidDerivative overloaded_rhs(double y_star, double y, const ModelParams& params, double r) {
  return {params.mu01 * y - params.mu02 * r,
          -params.mu01 * y + params.p * (params.mu02 * r + params.mu11 * (1.0 - y_star - y)), 0.0};
}

FluidDerivative underloaded_rhs(double y, double z, const ModelParams& params, double r) {
  const double rate = params.p * params.mu11 + (1.0 - params.p) * params.mu01;
  return {0.0, -rate * y + params.p * params.mu11,
          -params.mu02 * z - params.mu01 * y + params.mu02 * r};
}

namespace {

void require_finite(std::span<const double> x, double t) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFinite("state left the finite range at t = " + std::to_string(t));
  }
}

void check_horizon(double horizon, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt", "step must be > 0");
  if (!(horizon >= 0.0)) throw DomainError("horizon", "horizon must be >= 0");
}

void check_ratio(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("r", "ratio must be > 0");
}

}  // namespace

VectorPath integrate(const OdeRhs& rhs, std::span<const double> init, double horizon, double dt) {
  check_horizon(horizon, dt);
  if (horizon < dt) throw DomainError("horizon", "horizon must be >= dt");
  const std::size_t dim = init.size();
  const std::size_t steps = grid_steps(horizon, dt);

  VectorPath path(0.0, dt, dim);
  std::vector<double> x(init.begin(), init.end());
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  require_finite(x, 0.0);
  path.push_back(x);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = path.time(s);
    rhs(t, x, k1);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    rhs(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    rhs(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + dt * k3[i];
    rhs(t + dt, tmp, k4);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    require_finite(x, t + dt);
    path.push_back(x);
  }
  return path;
}

ReflectedSolution aux_saturated_fluid(const ModelParams& params, double r, double y_star0,
                                      double y0, double horizon, double dt) {
  validate(params);
  check_ratio(r);
  check_horizon(horizon, dt);
  if (!(y_star0 >= 0.0 && y0 >= 0.0 && y_star0 + y0 <= 1.0)) {
    throw DomainError("init", "initial state must lie in the simplex");
  }
  const std::size_t steps = grid_steps(horizon, dt);
  ReflectedSolution out{VectorPath(0.0, dt, 3), SampledPath{0.0, dt, {}}};
  out.regulator.values.reserve(steps + 1);

  double ys = y_star0;
  double y = y0;
  double u = 0.0;
  out.path.push_back(std::array{ys, y, 0.0});
  out.regulator.values.push_back(u);
  for (std::size_t s = 0; s < steps; ++s) {
    // Drift of the saturated system with the p mu02 r unblocking inflow on.
    const FluidDerivative d = overloaded_rhs(ys, y, params, r);
    double ys_next = ys + dt * d.d_y_star;
    double y_next = y + dt * d.d_y;
    if (ys_next < 0.0) {
      const double du = -ys_next;
      ys_next = 0.0;
      y_next -= params.p * du;
      u += du;
    }
    ys = ys_next;
    y = y_next;
    const std::array row{ys, y, 0.0};
    require_finite(row, out.path.time(s + 1));
    out.path.push_back(row);
    out.regulator.values.push_back(u);
  }
  return out;
}

ReflectedSolution aux_noblock_fluid(const ModelParams& params, double r, double y0, double z0,
                                    double horizon, double dt) {
  validate(params);
  check_ratio(r);
  check_horizon(horizon, dt);
  if (!(y0 >= 0.0 && y0 <= 1.0)) throw DomainError("y0", "must lie in [0, 1]");
  if (!(z0 >= 0.0 && z0 <= r)) throw DomainError("z0", "must lie in [0, r]");
  const std::size_t steps = grid_steps(horizon, dt);
  ReflectedSolution out{VectorPath(0.0, dt, 3), SampledPath{0.0, dt, {}}};
  out.regulator.values.reserve(steps + 1);

  double z = z0;
  double u = 0.0;
  out.path.push_back(std::array{0.0, y0, z});
  out.regulator.values.push_back(u);
  for (std::size_t s = 0; s < steps; ++s) {
    const double y = y_b_closed_form(out.path.time(s), params, y0);
    double z_next = z + dt * params.mu02 * (r - z) - dt * params.mu01 * y;
    if (z_next < 0.0) {
      u += -z_next;
      z_next = 0.0;
    }
    z = z_next;
    const std::array row{0.0, y_b_closed_form(out.path.time(s + 1), params, y0), z};
    require_finite(row, out.path.time(s + 1));
    out.path.push_back(row);
    out.regulator.values.push_back(u);
  }
  return out;
}

PathFunctional gbar_functional(const ModelParams& params, double r, double y_star0, double y0) {
  validate(params);
  check_ratio(r);
  if (!(y_star0 >= 0.0 && y0 >= 0.0 && y_star0 + y0 <= 1.0)) {
    throw DomainError("init", "initial state must lie in the simplex");
  }
  const double mubar = (1.0 - params.p) * params.mu01 + params.p * params.mu11;
  const double c = params.p * y_star0 + y0;

  // k(t) e^{-mubar t} written without the growing exponential.
  auto damped_k = [=](double t) {
    const double decay = std::exp(-mubar * t);
    return c * (1.0 - decay) / mubar +
           params.p * params.mu11 / (mubar * mubar) * (decay + mubar * t - 1.0);
  };

  PathFunctional phi;
  phi.apply = [=](const SampledPath& x) {
    validate(x);
    const double h = x.dt;
    const double kernel_step = std::exp(-mubar * h);
    SampledPath out{x.t0, x.dt, std::vector<double>(x.size())};

    double inner = 0.0;   // int_0^{t_k} x
    double outer = 0.0;   // int_0^{t_k} w(s) e^{-mubar (t_k - s)} ds
    double w_prev = x[0];
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k > 0) {
        inner += 0.5 * h * (x[k - 1] + x[k]);
        const double w = x[k] + params.mu11 * inner;
        outer = kernel_step * outer + 0.5 * h * (w_prev * kernel_step + w);
        w_prev = w;
      }
      const double t = x.time(k) - x.t0;
      out[k] = -params.p * params.mu01 * outer + y_star0 + params.mu01 * damped_k(t) -
               params.mu02 * r * t;
    }
    return out;
  };
  phi.lipschitz = [=](double t) { return params.p * params.mu01 * (1.0 + params.mu11 * t); };
  return phi;
}

namespace {

enum class Mode { Saturated, NoBlock };

Mode resolve_mode(double ys, double y, double z, const ModelParams& params, double r) {
  if (ys > 0.0) return Mode::Saturated;
  if (z > 0.0) return Mode::NoBlock;
  return params.mu01 * y > params.mu02 * r ? Mode::Saturated : Mode::NoBlock;
}

}  // namespace

VectorPath hybrid_fluid(const ModelParams& params, double r, const FluidState& init, double horizon,
                        double dt) {
  validate(params);
  check_ratio(r);
  check_horizon(horizon, dt);
  validate(init, r, 1e-9);
  const std::size_t steps = grid_steps(horizon, dt);

  VectorPath path(0.0, dt, 3);
  double ys = std::max(init.y_star, 0.0);
  double y = std::max(init.y, 0.0);
  double z = std::clamp(init.z, 0.0, r);
  path.push_back(std::array{ys, y, z});
  for (std::size_t s = 0; s < steps; ++s) {
    if (resolve_mode(ys, y, z, params, r) == Mode::Saturated) {
      const FluidDerivative d = overloaded_rhs(ys, y, params, r);
      ys += dt * d.d_y_star;
      y += dt * d.d_y;
      z = 0.0;
    } else {
      // y* = 0 here, so the drift is the no-blocking system.
      const FluidDerivative d = underloaded_rhs(y, z, params, r);
      y += dt * d.d_y;
      z += dt * d.d_z;
    }
    ys = std::max(ys, 0.0);
    z = std::clamp(z, 0.0, r);
    y = std::clamp(y, 0.0, 1.0 - ys);
    const std::array row{ys, y, z};
    require_finite(row, path.time(s + 1));
    path.push_back(row);
  }
  return path;
}

}  // namespace twolevel
