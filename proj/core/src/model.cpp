#include "twolevel/model.hpp"

#include <algorithm>
#include <cmath>

#include "twolevel/errors.hpp"

namespace twolevel {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Underloaded:
      return "Underloaded";
    case Regime::Overloaded:
      return "Overloaded";
    case Regime::Critical:
      return "Critical";
  }
  return "Unknown";
}

namespace {

void require_positive_rate(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw DomainError(name, "rate must be finite and > 0");
  }
}

void require_urgent_calls(const ModelParams& params) {
  if (params.p == 0.0) {
    throw DomainError("p", "quantity undefined without urgent calls (p = 0)");
  }
}

void require_positive_ratio(double r) {
  if (!std::isfinite(r) || r <= 0.0) throw DomainError("r", "ratio must be finite and > 0");
}

}  // namespace

void validate(const ModelParams& params) {
  if (!(params.p >= 0.0 && params.p <= 1.0)) {
    throw DomainError("p", "probability must lie in [0, 1]");
  }
  require_positive_rate(params.mu01, "mu01");
  require_positive_rate(params.mu11, "mu11");
  require_positive_rate(params.mu02, "mu02");
}

void validate(const ScalingParams& scaling) {
  if (scaling.n < 1) throw DomainError("n", "level-1 capacity must be >= 1");
  if (scaling.c2 < 1) throw DomainError("c2", "level-2 capacity must be >= 1");
}

void validate(const ModelParams& params, const ScalingParams& scaling) {
  validate(params);
  validate(scaling);
}

void validate(const FluidState& state, double r, double tol) {
  if (!(state.y_star >= -tol && state.y_star <= 1.0 + tol)) {
    throw DomainError("y_star", "must lie in [0, 1]");
  }
  if (!(state.y >= -tol && state.y <= 1.0 + tol)) throw DomainError("y", "must lie in [0, 1]");
  if (!(state.z >= -tol && state.z <= r + tol)) throw DomainError("z", "must lie in [0, r]");
  if (state.y_star + state.y > 1.0 + tol) throw DomainError("y_star", "y_star + y must be <= 1");
  if (std::abs(state.y_star * state.z) > tol) {
    throw DomainError("z", "blocked and idle fractions cannot both be positive");
  }
}

double critical_ratio(const ModelParams& params) {
  validate(params);
  const double level1_time = params.p / params.mu01 + (1.0 - params.p) / params.mu11;
  return (params.p / params.mu02) / level1_time;
}

Regime classify_regime(const ModelParams& params, double r, double tol) {
  const double rc = critical_ratio(params);
  const double band = tol * std::max(1.0, rc);
  if (r > rc + band) return Regime::Underloaded;
  if (r < rc - band) return Regime::Overloaded;
  return Regime::Critical;
}

OverloadedPoint overloaded_fixed_point(const ModelParams& params, double r) {
  validate(params);
  require_urgent_calls(params);
  require_positive_ratio(r);
  if (classify_regime(params, r) != Regime::Overloaded) {
    throw RegimeError("overloaded fixed point requires r < r_c");
  }
  const double y = params.mu02 * r / params.mu01;
  const double class1_share = (1.0 - params.p) * params.mu01 / (params.p * params.mu11);
  return {1.0 - y * (class1_share + 1.0), y};
}

double blocked_fraction_limit(const ModelParams& params, double r) {
  return overloaded_fixed_point(params, r).y_star;
}

double y_bar(const ModelParams& params) {
  validate(params);
  const double birth = params.p * params.mu11;
  return birth / (birth + (1.0 - params.p) * params.mu01);
}

UnderloadedPoint underloaded_fixed_point(const ModelParams& params, double r) {
  validate(params);
  require_positive_ratio(r);
  if (classify_regime(params, r) != Regime::Underloaded) {
    throw RegimeError("underloaded fixed point requires r > r_c");
  }
  const double y = y_bar(params);
  return {y, r - params.mu01 * y / params.mu02};
}

double y_underline(const ModelParams& params, double r) {
  validate(params);
  return r * params.mu02 / params.mu01;
}

double h_bar_limit(const ModelParams& params, double r) {
  validate(params);
  require_urgent_calls(params);
  return 1.0 - (1.0 - params.p) * params.mu02 * r / (params.p * params.mu11);
}

double h_bar(double t, const ModelParams& params, double r, double init_sum) {
  if (!(t >= 0.0)) throw DomainError("t", "time must be >= 0");
  if (!(init_sum >= 0.0 && init_sum <= 1.0)) throw DomainError("init_sum", "must lie in [0, 1]");
  const double limit = h_bar_limit(params, r);
  const double decay = std::exp(-params.p * params.mu11 * t);
  return init_sum * decay + limit * (1.0 - decay);
}

double y_b_closed_form(double t, const ModelParams& params, double y0) {
  if (!(t >= 0.0)) throw DomainError("t", "time must be >= 0");
  if (!(y0 >= 0.0 && y0 <= 1.0)) throw DomainError("y0", "must lie in [0, 1]");
  const double rate = params.p * params.mu11 + (1.0 - params.p) * params.mu01;
  const double decay = std::exp(-rate * t);
  return y0 * decay + y_bar(params) * (1.0 - decay);
}

int min_c2_without_congestion(const ModelParams& params, int n) {
  if (n < 1) throw DomainError("n", "level-1 capacity must be >= 1");
  const double rc = critical_ratio(params);
  auto underloaded = [&](int c2) {
    return classify_regime(params, static_cast<double>(c2) / n) == Regime::Underloaded;
  };
  int c2 = std::max(1, static_cast<int>(std::floor(rc * n)) + 1);
  while (c2 > 1 && underloaded(c2 - 1)) --c2;
  while (!underloaded(c2)) ++c2;
  return c2;
}

}  // namespace twolevel
