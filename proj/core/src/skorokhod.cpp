#include "twolevel/skorokhod.hpp"

#include <algorithm>
#include <cmath>

#include "twolevel/errors.hpp"

namespace twolevel {

Reflection reflect_1d(const SampledPath& free) {
  validate(free);
  if (free.values.front() < 0.0) throw DomainError("free", "free path must start at a value >= 0");

  Reflection out{{free.t0, free.dt, {}}, {free.t0, free.dt, {}}};
  out.reflected.values.reserve(free.size());
  out.regulator.values.reserve(free.size());
  double pushed = 0.0;
  for (double f : free.values) {
    pushed = std::max(pushed, -f);
    // f + pushed is exactly 0 at indices where the regulator just increased.
    out.reflected.values.push_back(f + pushed);
    out.regulator.values.push_back(pushed);
  }
  return out;
}

bool check_complementarity(const SampledPath& reflected, const SampledPath& regulator,
                           double tol) {
  if (!same_grid(reflected, regulator)) throw GridMismatch("reflected and regulator grids differ");
  double product = 0.0;
  for (std::size_t k = 1; k < regulator.size(); ++k) {
    const double increment = regulator[k] - regulator[k - 1];
    if (increment < -tol) return false;
    product += reflected[k] * std::max(increment, 0.0);
  }
  return product <= tol;
}

GeneralizedSolution solve_generalized(const PathFunctional& phi, double horizon, double dt,
                                      const PicardOptions& options) {
  if (!(dt > 0.0)) throw DomainError("dt", "grid step must be > 0");
  if (!(options.tol > 0.0)) throw DomainError("tol", "tolerance must be > 0");
  if (options.max_iter < 1) throw DomainError("max_iter", "must be >= 1");
  if (!phi.apply) throw DomainError("phi", "functional has no evaluation rule");

  const std::size_t points = grid_steps(horizon, dt) + 1;
  SampledPath current{0.0, dt, std::vector<double>(points, options.initial_value)};

  GeneralizedSolution out;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    SampledPath free = phi.apply(current);
    if (!same_grid(free, current)) throw GridMismatch("functional changed the grid");
    Reflection next = reflect_1d(free);

    double change = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      change = std::max(change, std::abs(next.reflected[k] - current[k]));
    }
    out.residuals.push_back(change);
    current = std::move(next.reflected);
    out.regulator = std::move(next.regulator);
    out.iterations = iter;
    if (change <= options.tol) {
      out.solution = std::move(current);
      return out;
    }
  }
  throw NoConvergence(options.max_iter, out.residuals.back());
}

}  // namespace twolevel
