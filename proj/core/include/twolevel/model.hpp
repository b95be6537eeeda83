#pragma once

// Model parameters, regime classification and the closed-form quantities of
// the two-level blocking network: critical ratio, fluid fixed points,
// asymptotic blocked fraction and the comparison bounds.

#include <string_view>
#include <utility>

namespace twolevel {

struct ModelParams {
  double p = 0.5;     // probability that an incoming job is urgent (class 0)
  double mu01 = 1.0;  // class-0 service rate at level 1
  double mu11 = 1.0;  // class-1 service rate at level 1
  double mu02 = 1.0;  // class-0 service rate at level 2
};

struct ScalingParams {
  int n = 100;  // level-1 servers, C1 = N
  int c2 = 50;  // level-2 servers

  double ratio() const { return static_cast<double>(c2) / static_cast<double>(n); }
};

enum class Regime { Underloaded, Overloaded, Critical };

std::string_view to_string(Regime regime);

// Rescaled state (y*, y, z): blocked fraction, class-0 fraction in service at
// level 1, idle fraction at level 2.
struct FluidState {
  double y_star = 0.0;
  double y = 0.0;
  double z = 0.0;
};

void validate(const ModelParams& params);
void validate(const ScalingParams& scaling);
void validate(const ModelParams& params, const ScalingParams& scaling);

// Throws DomainError unless the state lies in [0,1]^2 x [0,r] with
// y* + y <= 1 and y* z = 0 (up to tol).
void validate(const FluidState& state, double r, double tol = 1e-12);

// Ratio C2/C1 separating the two regimes.
double critical_ratio(const ModelParams& params);

inline constexpr double kDefaultRegimeTol = 1e-12;

// Underloaded iff r > r_c + tol, Overloaded iff r < r_c - tol, Critical
// otherwise. tol is relative to max(1, r_c).
Regime classify_regime(const ModelParams& params, double r, double tol = kDefaultRegimeTol);

// Asymptotic fraction of blocked level-1 servers in the overloaded regime.
double blocked_fraction_limit(const ModelParams& params, double r);

struct OverloadedPoint {
  double y_star;
  double y;
};

struct UnderloadedPoint {
  double y;
  double z;
};

OverloadedPoint overloaded_fixed_point(const ModelParams& params, double r);
UnderloadedPoint underloaded_fixed_point(const ModelParams& params, double r);

// Equilibrium class-0 fraction at level 1 when nothing is blocked.
double y_bar(const ModelParams& params);

double y_underline(const ModelParams& params, double r);

// Lower bound for y_a* + y_a along the saturated auxiliary fluid path.
double h_bar(double t, const ModelParams& params, double r, double init_sum);
double h_bar_limit(const ModelParams& params, double r);

// y_b(t) = y0 e^{-a t} + ybar (1 - e^{-a t}), a = p mu11 + (1-p) mu01.
double y_b_closed_form(double t, const ModelParams& params, double y0);

// Smallest C2 with C2 / n strictly inside the underloaded regime.
int min_c2_without_congestion(const ModelParams& params, int n);

}  // namespace twolevel
