#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "twolevel/errors.hpp"
#include "twolevel/fluid.hpp"
#include "twolevel/model.hpp"

using namespace twolevel;

namespace {

const ModelParams kSym{0.5, 1.0, 1.0, 1.0};

// Random valid parameters with p in (0.05, 0.95) and rates in (0.2, 5).
ModelParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  std::uniform_real_distribution<double> rate(0.2, 5.0);
  return {prob(gen), rate(gen), rate(gen), rate(gen)};
}

// Overloaded draw: r strictly inside (0, r_c).
std::pair<ModelParams, double> random_overloaded(std::mt19937_64& gen) {
  for (;;) {
    const ModelParams p = random_params(gen);
    const double rc = critical_ratio(p);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    const double r = rc * frac(gen);
    if (r > 0.0 && classify_regime(p, r) == Regime::Overloaded) return {p, r};
  }
}

}  // namespace

TEST(Validate, AcceptsSymmetricBaseline) {
  EXPECT_NO_THROW(validate(kSym, ScalingParams{100, 50}));
}

TEST(Validate, NamesTheViolatedField) {
  try {
    validate(ModelParams{1.2, 1, 1, 1});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.field(), "p");
  }
  try {
    validate(ModelParams{0.5, 1, 1, 0});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.field(), "mu02");
  }
  try {
    validate(ScalingParams{0, 1});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.field(), "n");
  }
}

TEST(FluidStateValidation, RejectsBlockedAndIdleTogether) {
  EXPECT_NO_THROW(validate(FluidState{0.4, 0.3, 0.0}, 0.3));
  EXPECT_THROW(validate(FluidState{0.1, 0.3, 0.1}, 0.3), DomainError);
  EXPECT_THROW(validate(FluidState{0.0, 0.3, 0.5}, 0.3), DomainError);
  EXPECT_THROW(validate(FluidState{0.6, 0.6, 0.0}, 0.3), DomainError);
}

TEST(CriticalRatio, Examples) {
  EXPECT_DOUBLE_EQ(critical_ratio(kSym), 0.5);
  EXPECT_DOUBLE_EQ(critical_ratio({0.0, 1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(critical_ratio({1.0, 2.0, 7.0, 1.0}), 2.0);
}

TEST(ClassifyRegime, Examples) {
  EXPECT_EQ(classify_regime(kSym, 0.7, 1e-9), Regime::Underloaded);
  EXPECT_EQ(classify_regime(kSym, 0.3, 1e-9), Regime::Overloaded);
  EXPECT_EQ(classify_regime(kSym, 0.5, 1e-9), Regime::Critical);
}

TEST(ClassifyRegime, CriticalAtExactRatioForRandomDraws) {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 1000; ++i) {
    const ModelParams p = random_params(gen);
    EXPECT_EQ(classify_regime(p, critical_ratio(p), 0.0), Regime::Critical);
  }
}

TEST(BlockedFraction, Examples) {
  EXPECT_NEAR(blocked_fraction_limit(kSym, 0.3), 0.4, 1e-15);
  EXPECT_NEAR(blocked_fraction_limit(kSym, 0.5 - 1e-9), 0.0, 1e-8);
  EXPECT_THROW(blocked_fraction_limit(kSym, 0.7), RegimeError);
  EXPECT_THROW(blocked_fraction_limit({0.0, 1, 1, 1}, 0.3), DomainError);
}

// Independent route: integrate the overloaded ODE to t = 100 and read off y*.
TEST(BlockedFraction, MatchesLongRunOdeForAsymmetricRates) {
  const ModelParams mp{0.5, 2.0, 1.0, 1.0};
  const double r = 0.4;
  const std::vector<double> x0{0.3, 0.1};
  const VectorPath path = integrate(
      [&](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = mp.mu01 * x[1] - mp.mu02 * r;
        dx[1] = -mp.mu01 * x[1] + mp.p * (mp.mu02 * r + mp.mu11 * (1.0 - x[0] - x[1]));
      },
      x0, 100.0, 1e-3);
  const double ode = path.at(path.size() - 1, 0);
  EXPECT_NEAR(ode, 0.4, 1e-9);
  EXPECT_NEAR(blocked_fraction_limit(mp, r), ode, 1e-9);
}

TEST(BlockedFraction, AlgebraicIdentity) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 1000; ++i) {
    const auto [p, r] = random_overloaded(gen);
    const double rest = (p.mu02 * r / p.mu01) * ((1 - p.p) * p.mu01 / (p.p * p.mu11) + 1);
    EXPECT_NEAR(blocked_fraction_limit(p, r) + rest, 1.0, 1e-12);
  }
}

TEST(OverloadedFixedPoint, Examples) {
  auto fp = overloaded_fixed_point(kSym, 0.3);
  EXPECT_NEAR(fp.y_star, 0.4, 1e-15);
  EXPECT_NEAR(fp.y, 0.3, 1e-15);
  fp = overloaded_fixed_point(kSym, 0.1);
  EXPECT_NEAR(fp.y_star, 0.8, 1e-15);
  EXPECT_NEAR(fp.y, 0.1, 1e-15);
  EXPECT_THROW(overloaded_fixed_point(kSym, 0.5), RegimeError);
}

TEST(UnderloadedFixedPoint, Examples) {
  const auto fp = underloaded_fixed_point(kSym, 0.7);
  EXPECT_NEAR(fp.y, 0.5, 1e-15);
  EXPECT_NEAR(fp.z, 0.2, 1e-15);
  const auto edge = underloaded_fixed_point(kSym, 0.5 + 1e-9);
  EXPECT_NEAR(edge.z, 0.0, 1e-8);
  const auto none = underloaded_fixed_point({0.0, 1, 1, 1}, 0.3);
  EXPECT_DOUBLE_EQ(none.y, 0.0);
  EXPECT_DOUBLE_EQ(none.z, 0.3);
  EXPECT_THROW(underloaded_fixed_point(kSym, 0.3), RegimeError);
}

TEST(FixedPoints, AreZerosOfTheirRhs) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 1000; ++i) {
    const auto [p, r] = random_overloaded(gen);
    const auto fp = overloaded_fixed_point(p, r);
    const auto d = overloaded_rhs(fp.y_star, fp.y, p, r);
    EXPECT_LE(std::abs(d.d_y_star), 1e-12);
    EXPECT_LE(std::abs(d.d_y), 1e-12);

    const ModelParams q = random_params(gen);
    const double ru = critical_ratio(q) * 1.5 + 0.01;
    const auto up = underloaded_fixed_point(q, ru);
    const auto e = underloaded_rhs(up.y, up.z, q, ru);
    EXPECT_LE(std::abs(e.d_y), 1e-12);
    EXPECT_LE(std::abs(e.d_z), 1e-12);
    EXPECT_GT(up.z, 0.0);
    EXPECT_DOUBLE_EQ(up.y, y_bar(q));
  }
}

TEST(YBar, Examples) {
  EXPECT_DOUBLE_EQ(y_bar(kSym), 0.5);
  EXPECT_DOUBLE_EQ(y_bar({1.0, 3, 2, 1}), 1.0);
  EXPECT_DOUBLE_EQ(y_bar({0.0, 3, 2, 1}), 0.0);
  EXPECT_NEAR(y_bar({0.25, 1.0, 2.0, 1.0}), 0.4, 1e-15);
}

TEST(YUnderline, Examples) {
  EXPECT_DOUBLE_EQ(y_underline(kSym, 0.7), 0.7);
  EXPECT_DOUBLE_EQ(y_underline({0.5, 4.0, 1.0, 2.0}, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(y_underline(kSym, 0.0), 0.0);
}

TEST(HBar, Examples) {
  EXPECT_DOUBLE_EQ(h_bar(0.0, kSym, 0.3, 0.6), 0.6);
  EXPECT_NEAR(h_bar(1e3, kSym, 0.3, 0.0), 0.7, 1e-15);
  for (double t : {0.0, 0.5, 3.0, 40.0}) EXPECT_NEAR(h_bar(t, kSym, 0.3, 0.7), 0.7, 1e-15);
  EXPECT_THROW(h_bar(1.0, {0.0, 1, 1, 1}, 0.3, 0.5), DomainError);
}

TEST(HBar, MonotoneBetweenEndpoints) {
  double prev = h_bar(0.0, kSym, 0.3, 0.1);
  for (int k = 1; k <= 100; ++k) {
    const double v = h_bar(0.1 * k, kSym, 0.3, 0.1);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(HBar, LimitEqualsOverloadedCoordinateSum) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 1000; ++i) {
    const auto [p, r] = random_overloaded(gen);
    const auto fp = overloaded_fixed_point(p, r);
    EXPECT_NEAR(h_bar_limit(p, r), fp.y_star + fp.y, 1e-12);
  }
}

TEST(YbClosedForm, Examples) {
  EXPECT_DOUBLE_EQ(y_b_closed_form(0.0, kSym, 0.2), 0.2);
  for (double t : {0.0, 1.0, 10.0}) EXPECT_NEAR(y_b_closed_form(t, kSym, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(y_b_closed_form(1.0, kSym, 0.0), 0.31606027941427883, 1e-15);
}

TEST(YbClosedForm, SolvesItsOde) {
  const ModelParams mp{0.3, 1.7, 0.6, 1.1};
  const double h = 1e-4;
  const double a = mp.p * mp.mu11 + (1 - mp.p) * mp.mu01;
  for (double t = h; t < 5.0; t += 0.01) {
    const double fd = (y_b_closed_form(t + h, mp, 0.9) - y_b_closed_form(t - h, mp, 0.9)) / (2 * h);
    const double rhs = -a * y_b_closed_form(t, mp, 0.9) + mp.p * mp.mu11;
    EXPECT_LE(std::abs(fd - rhs), 1e-6);
  }
}

TEST(MinCapacity, SmallestStrictlyUnderloadedC2) {
  EXPECT_EQ(min_c2_without_congestion(kSym, 100), 51);
  EXPECT_EQ(min_c2_without_congestion(kSym, 1), 1);
  const ModelParams mp{0.3, 1.7, 0.6, 1.1};
  for (int n : {7, 50, 333}) {
    const int c2 = min_c2_without_congestion(mp, n);
    EXPECT_EQ(classify_regime(mp, static_cast<double>(c2) / n), Regime::Underloaded);
    if (c2 > 1) {
      EXPECT_NE(classify_regime(mp, static_cast<double>(c2 - 1) / n), Regime::Underloaded);
    }
  }
}
