#pragma once

// One-dimensional Skorokhod reflection at 0 on uniform grids.
//
// For a free path f with f(0) >= 0 the unique decomposition y = f + u with
// y >= 0, u non-decreasing from 0 and u increasing only when y = 0 is
//   u(t) = sup_{s <= t} max(0, -f(s)),
// evaluated here as a running maximum in one pass.
//
// The generalized problem lets the free path depend causally on the solution,
// y = Phi(y) + u; it is solved by Picard iteration x_{n+1} = Gamma(Phi(x_n)).

#include <functional>
#include <vector>

#include "twolevel/path.hpp"

namespace twolevel {

struct Reflection {
  SampledPath reflected;
  SampledPath regulator;
};

Reflection reflect_1d(const SampledPath& free);

// True iff the regulator is non-decreasing (up to tol) and
// sum_k reflected[k] * (regulator[k] - regulator[k-1]) <= tol.
bool check_complementarity(const SampledPath& reflected, const SampledPath& regulator,
                           double tol);

// Causal map from paths to paths on the same grid, with a declared Lipschitz
// rule L(t): ||Phi(a) - Phi(b)||_{inf,t} <= L(t) * int_0^t ||a - b||_{inf,s} ds.
struct PathFunctional {
  std::function<SampledPath(const SampledPath&)> apply;
  std::function<double(double)> lipschitz;
};

struct GeneralizedSolution {
  SampledPath solution;
  SampledPath regulator;
  int iterations = 0;
  // Sup-norm change between successive iterates, one entry per iteration.
  std::vector<double> residuals;
};

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 500;
  double initial_value = 0.0;  // constant starting path x_0
};

GeneralizedSolution solve_generalized(const PathFunctional& phi, double horizon, double dt,
                                      const PicardOptions& options = {});

}  // namespace twolevel
