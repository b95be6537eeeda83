#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "twolevel/errors.hpp"
#include "twolevel/ctmc.hpp"
#include "twolevel/exact.hpp"

using namespace twolevel;

namespace {

const ModelParams kSym{0.5, 1.0, 1.0, 1.0};

using Delta = std::array<int, 3>;

std::map<Delta, double> as_map(const TransitionList& list) {
  std::map<Delta, double> m;
  for (const Transition& t : list) m[t.delta] += t.rate;
  return m;
}

void expect_same_rates(const std::map<Delta, double>& a, const std::map<Delta, double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [delta, rate] : a) {
    ASSERT_TRUE(b.contains(delta));
    EXPECT_NEAR(rate, b.at(delta), 1e-12 * std::max(1.0, rate));
  }
}

// Clause rates of the main process written out one by one, for the
// double-entry check.
double clause_total(const MicroState& s, const ModelParams& mp, const ScalingParams& sc) {
  const double y = s.y;
  double total = 0.0;
  total += s.z == 0 ? mp.mu01 * y : 0.0;
  total += s.z > 0 ? mp.mu01 * y * (1 - mp.p) : 0.0;
  total += s.z > 0 ? mp.mu01 * y * mp.p : 0.0;
  total += mp.mu11 * mp.p * (sc.n - s.y_star - s.y);
  total += s.y_star > 0 ? (1 - mp.p) * mp.mu02 * sc.c2 : 0.0;
  total += s.y_star > 0 ? mp.p * mp.mu02 * sc.c2 : 0.0;
  total += s.y_star == 0 ? mp.mu02 * (sc.c2 - s.z) : 0.0;
  return total;
}

}  // namespace

TEST(Transitions, MainExampleWithIdleLevel2) {
  const auto m = as_map(enabled_transitions({0, 2, 1}, kSym, {3, 1}));
  const std::map<Delta, double> want{{{0, -1, -1}, 1.0}, {{0, 0, -1}, 1.0}, {{0, 1, 0}, 0.5}};
  EXPECT_EQ(m, want);
}

TEST(Transitions, MainExampleWithBlocking) {
  const auto m = as_map(enabled_transitions({1, 1, 0}, kSym, {3, 1}));
  const std::map<Delta, double> want{
      {{1, -1, 0}, 1.0}, {{-1, 0, 0}, 0.5}, {{-1, 1, 0}, 0.5}, {{0, 1, 0}, 0.5}};
  EXPECT_EQ(m, want);
}

TEST(Transitions, CornerWithNothingBlockedAndNothingIdle) {
  // y* = 0, z = 0: blocking completion and level-2 refill are both live.
  const auto m = as_map(enabled_transitions({0, 2, 0}, kSym, {3, 2}));
  const std::map<Delta, double> want{{{1, -1, 0}, 2.0}, {{0, 1, 0}, 0.5}, {{0, 0, 1}, 2.0}};
  EXPECT_EQ(m, want);
}

TEST(Transitions, AbsorbingWithoutUrgentCalls) {
  EXPECT_TRUE(enabled_transitions({0, 0, 2}, {0.0, 1, 1, 1}, {3, 2}).empty());
}

TEST(Transitions, AuxSaturatedExample) {
  const auto m = as_map(enabled_transitions({1, 0, 0}, kSym, {5, 2}, Process::AuxSaturated));
  const std::map<Delta, double> want{{{-1, 0, 0}, 1.0}, {{-1, 1, 0}, 1.0}, {{0, 1, 0}, 2.0}};
  EXPECT_EQ(m, want);
  const auto none = as_map(enabled_transitions({0, 3, 0}, kSym, {5, 2}, Process::AuxSaturated));
  EXPECT_FALSE(none.contains(Delta{-1, 0, 0}));
  EXPECT_FALSE(none.contains(Delta{-1, 1, 0}));
}

TEST(Transitions, AuxNoBlockExamples) {
  const auto leave = as_map(enabled_transitions({0, 3, 0}, kSym, {5, 2}, Process::AuxNoBlock));
  EXPECT_DOUBLE_EQ(leave.at({0, -1, 0}), 1.5);
  EXPECT_FALSE(leave.contains(Delta{0, -1, -1}));
  EXPECT_FALSE(leave.contains(Delta{0, 0, -1}));
  const auto full = as_map(enabled_transitions({0, 0, 2}, kSym, {5, 2}, Process::AuxNoBlock));
  const std::map<Delta, double> want{{{0, 1, 0}, 2.5}};
  EXPECT_EQ(full, want);
}

TEST(Transitions, InvalidStatesAreRejected) {
  EXPECT_THROW(enabled_transitions({1, 0, 1}, kSym, {3, 1}), InvalidState);
  EXPECT_THROW(enabled_transitions({2, 2, 0}, kSym, {3, 1}), InvalidState);
  EXPECT_THROW(enabled_transitions({0, 0, 2}, kSym, {3, 1}), InvalidState);
  EXPECT_THROW(enabled_transitions({0, 0, 1}, kSym, {3, 1}, Process::AuxSaturated), InvalidState);
  EXPECT_THROW(enabled_transitions({1, 0, 0}, kSym, {3, 1}, Process::AuxNoBlock), InvalidState);
}

TEST(Transitions, TargetsStayInStateSpaceAndTotalsMatchClauses) {
  const ModelParams mp{0.3, 1.7, 0.6, 1.1};
  for (int n = 1; n <= 6; ++n) {
    for (int c2 = 1; c2 <= 4; ++c2) {
      const ScalingParams sc{n, c2};
      for (const MicroState& s : enumerate_states(sc)) {
        const TransitionList list = enabled_transitions(s, mp, sc);
        for (const Transition& t : list) {
          EXPECT_GT(t.rate, 0.0);
          EXPECT_NO_THROW(validate_state(t.apply(s), sc));
        }
        EXPECT_NEAR(list.total_rate(), clause_total(s, mp, sc), 1e-12);
      }
    }
  }
}

TEST(Transitions, AgreesWithAuxiliaryProcessesOnSharedStates) {
  const ModelParams mp{0.3, 1.7, 0.6, 1.1};
  const ScalingParams sc{6, 3};
  for (const MicroState& s : enumerate_states(sc)) {
    const auto main = as_map(enabled_transitions(s, mp, sc));
    if (s.y_star > 0) {
      expect_same_rates(main, as_map(enabled_transitions(s, mp, sc, Process::AuxSaturated)));
    }
    if (s.z > 0) {
      expect_same_rates(main, as_map(enabled_transitions(s, mp, sc, Process::AuxNoBlock)));
    }
  }
}

TEST(Step, SingleTransitionHoldingTimeMean) {
  // (0,0,C2) with p = 1: the only move is a class-0 admission at rate mu11 N.
  const ModelParams mp{1.0, 1.0, 2.0, 1.0};
  const ScalingParams sc{1, 1};
  Rng rng(99);
  const int draws = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto s = step({0, 0, 1}, rng, mp, sc);
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(s->next, (MicroState{0, 1, 1}));
    sum += s->holding;
    sq += s->holding * s->holding;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  EXPECT_NEAR(mean, 0.5, 3 * se);
}

TEST(Step, SelectionFrequencies) {
  Rng rng(7);
  const int draws = 100000;
  std::map<MicroState, int> counts;
  for (int i = 0; i < draws; ++i) ++counts[step({0, 2, 1}, rng, kSym, {3, 1})->next];
  const std::map<MicroState, double> want{{{0, 1, 0}, 0.4}, {{0, 2, 0}, 0.4}, {{0, 3, 1}, 0.2}};
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [s, prob] : want) {
    const double freq = static_cast<double>(counts[s]) / draws;
    EXPECT_NEAR(freq, prob, 3 * std::sqrt(prob * (1 - prob) / draws));
  }
}

TEST(Step, DeterministicAndAbsorbing) {
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 100; ++i) {
    const auto x = step({0, 2, 1}, a, kSym, {3, 1});
    const auto y = step({0, 2, 1}, b, kSym, {3, 1});
    EXPECT_EQ(x->holding, y->holding);
    EXPECT_EQ(x->next, y->next);
  }
  EXPECT_FALSE(step({0, 0, 2}, a, {0.0, 1, 1, 1}, {3, 2}).has_value());
}

TEST(Rng, UniformIsInsideTheOpenInterval) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Simulate, ZeroHorizonHasNoEvents) {
  const Trajectory t = simulate({0, 0, 0}, kSym, {10, 3}, 0.0, 1);
  EXPECT_TRUE(t.events.empty());
  std::ostringstream os;
  write_trajectory_csv(os, t);
  EXPECT_EQ(os.str(), "t,y_star,y,z\n0,0,0,0\n");
}

TEST(Simulate, SingleServerAlternation) {
  // N = 1, C2 = 1, p = 1 from (0,0,1): admit, complete into level 2, refill.
  const Trajectory t = simulate({0, 0, 1}, {1.0, 1, 1, 1}, {1, 1}, 50.0, 3);
  ASSERT_GE(t.events.size(), 3u);
  EXPECT_EQ(t.events[0].state, (MicroState{0, 1, 1}));
  EXPECT_EQ(t.events[1].state, (MicroState{0, 1, 0}));
  const std::set<MicroState> allowed{{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {1, 0, 0}};
  for (const Event& e : t.events) EXPECT_TRUE(allowed.contains(e.state));
}

TEST(Simulate, VisitedStatesAreValidAndConsecutiveStatesDifferByOneTransition) {
  const ModelParams mp{0.4, 1.3, 0.7, 0.9};
  std::size_t events = 0;
  for (std::uint64_t seed = 1; events < 1'000'000; ++seed) {
    const ScalingParams sc{20 + static_cast<int>(seed % 30), 3 + static_cast<int>(seed % 17)};
    const Trajectory t = simulate({0, 0, 0}, mp, sc, 200.0, seed);
    MicroState prev = t.initial;
    double time = 0.0;
    for (const Event& e : t.events) {
      ASSERT_NO_THROW(validate_state(e.state, sc));
      ASSERT_GT(e.t, time);
      ASSERT_LE(e.t, t.horizon);
      const auto m = as_map(enabled_transitions(prev, mp, sc));
      const Delta d{e.state.y_star - prev.y_star, e.state.y - prev.y, e.state.z - prev.z};
      ASSERT_TRUE(m.contains(d));
      prev = e.state;
      time = e.t;
    }
    events += t.events.size();
  }
}

TEST(Simulate, SameSeedSameTrajectory) {
  const Trajectory a = simulate({0, 0, 0}, kSym, {50, 15}, 20.0, 42);
  const Trajectory b = simulate({0, 0, 0}, kSym, {50, 15}, 20.0, 42);
  std::ostringstream x;
  std::ostringstream y;
  write_trajectory_csv(x, a);
  write_trajectory_csv(y, b);
  EXPECT_EQ(x.str(), y.str());
  const Trajectory c = simulate({0, 0, 0}, kSym, {50, 15}, 20.0, 43);
  std::ostringstream z;
  write_trajectory_csv(z, c);
  EXPECT_NE(x.str(), z.str());
}

TEST(Simulate, AbsorbingRunStopsEarly) {
  const Trajectory t = simulate({0, 0, 2}, {0.0, 1, 1, 1}, {3, 2}, 10.0, 1);
  EXPECT_TRUE(t.absorbed);
  EXPECT_TRUE(t.events.empty());
}

TEST(Simulate, EventCapKeepsGridSamples) {
  SimulateOptions options;
  options.max_events = 100;
  options.sample_dt = 0.05;
  const Trajectory t = simulate({0, 0, 0}, kSym, {50, 15}, 10.0, 4, Process::Main, options);
  EXPECT_TRUE(t.events_truncated);
  EXPECT_EQ(t.events.size(), 100u);
  EXPECT_GT(t.event_count, 100u);
  const VectorPath p = rescale(t, {50, 15}, 0.05);
  EXPECT_EQ(p.size(), 201u);

  options.max_events = 10'000'000;
  const Trajectory full = simulate({0, 0, 0}, kSym, {50, 15}, 10.0, 4, Process::Main, options);
  const VectorPath q = rescale(full, {50, 15}, 0.05);
  ASSERT_EQ(q.size(), p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(p.at(k, c), q.at(k, c));
  }
}

TEST(Simulate, AuxWrappersStayInTheirStateSpaces) {
  const Trajectory a = simulate_aux_saturated(0, 0, kSym, {40, 12}, 20.0, 8);
  for (const Event& e : a.events) EXPECT_EQ(e.state.z, 0);
  const Trajectory b = simulate_aux_noblock(0, 0, kSym, {40, 12}, 20.0, 8);
  for (const Event& e : b.events) EXPECT_EQ(e.state.y_star, 0);
  EXPECT_EQ(a.process, Process::AuxSaturated);
  EXPECT_EQ(b.process, Process::AuxNoBlock);
}

TEST(Simulate, NoBlockingOnWindowInTheUnderloadedRegime) {
  const ScalingParams sc{200, 140};
  const Trajectory t = simulate({0, 0, 0}, kSym, sc, 50.0, 2);
  double blocked = 0.0;
  MicroState current = t.initial;
  double last = 0.0;
  for (const Event& e : t.events) {
    const double a = std::max(last, 10.0);
    if (e.t > a && current.y_star > 0) blocked += e.t - a;
    current = e.state;
    last = e.t;
  }
  if (current.y_star > 0) blocked += 50.0 - std::max(last, 10.0);
  EXPECT_LE(blocked / 40.0, 0.02);
}

TEST(Rescale, ConstantAndDivision) {
  Trajectory t;
  t.initial = {0, 100, 0};
  t.horizon = 1.0;
  const VectorPath p = rescale(t, {100, 30}, 0.1);
  EXPECT_EQ(p.size(), 11u);
  for (std::size_t k = 0; k < p.size(); ++k) {
    EXPECT_DOUBLE_EQ(p.at(k, 0), 0.0);
    EXPECT_DOUBLE_EQ(p.at(k, 1), 1.0);
    EXPECT_DOUBLE_EQ(p.at(k, 2), 0.0);
  }
  t.initial = {40, 30, 0};
  const VectorPath q = rescale(t, {100, 30}, 0.5);
  EXPECT_DOUBLE_EQ(q.at(1, 0), 0.4);
  EXPECT_DOUBLE_EQ(q.at(1, 1), 0.3);
}

TEST(Rescale, FineGridSeesEveryJump) {
  const Trajectory t = simulate({0, 0, 0}, kSym, {5, 2}, 5.0, 12);
  double min_gap = 1.0;
  double prev = 0.0;
  for (const Event& e : t.events) {
    min_gap = std::min(min_gap, e.t - prev);
    prev = e.t;
  }
  const double dt = min_gap / 2;
  const VectorPath p = rescale(t, {5, 2}, dt);
  std::size_t changes = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    bool differs = false;
    for (std::size_t c = 0; c < 3; ++c) differs |= p.at(k, c) != p.at(k - 1, c);
    changes += differs ? 1 : 0;
  }
  EXPECT_EQ(changes, t.events.size());
}

TEST(Martingale, ZeroForAbsorbedChain) {
  const ModelParams none{0.0, 1, 1, 1};
  const Trajectory t = simulate({0, 0, 2}, none, {3, 2}, 10.0, 1);
  const VectorPath m = martingale_residual(t, none, {3, 2}, 0.1);
  for (double v : m.data()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Martingale, SingleJumpIsOneOverN) {
  // One hand-made event: a class-0 admission at t = 0.5 from (0,0,C2), p = 1.
  const ModelParams mp{1.0, 1.0, 2.0, 1.0};
  const ScalingParams sc{4, 1};
  Trajectory t;
  t.initial = {0, 0, 1};
  t.horizon = 1.0;
  t.events = {{0.5, {0, 1, 1}}};
  const VectorPath m = martingale_residual(t, mp, sc, 0.25);
  EXPECT_DOUBLE_EQ(m.at(0, 1), 0.0);
  // Before the jump the compensator of y grows at mu11 p (1 - 0) = 2.
  EXPECT_NEAR(m.at(1, 1), -0.5, 1e-12);
  EXPECT_NEAR(m.at(2, 1) - (m.at(1, 1) - 0.5), 0.25, 1e-12);
}

TEST(Martingale, ResidualStartsAtZeroAndShrinksWithN) {
  const auto rms_sup = [&](int n) {
    const ScalingParams sc{n, static_cast<int>(0.3 * n)};
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const Trajectory t = simulate({0, 0, 0}, kSym, sc, 10.0, seed);
      const VectorPath m = martingale_residual(t, kSym, sc, 0.01);
      double sup = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) sup = std::max(sup, std::abs(m.at(k, 1)));
      EXPECT_DOUBLE_EQ(m.at(0, 1), 0.0);
      sum += sup * sup;
    }
    return std::sqrt(sum / 50);
  };
  EXPECT_GE(rms_sup(100) / rms_sup(400), 1.5);
}

TEST(MicroFromFluid, RoundsAndClips) {
  EXPECT_EQ(micro_from_fluid({0.4, 0.3, 0.0}, {100, 30}), (MicroState{40, 30, 0}));
  EXPECT_EQ(micro_from_fluid({0.0, 0.5, 0.9}, {100, 30}), (MicroState{0, 50, 30}));
  EXPECT_EQ(micro_from_fluid({0.0, 0.5, 0.2}, {100, 30}, Process::AuxSaturated), (MicroState{0, 50, 0}));
  EXPECT_EQ(micro_from_fluid({0.2, 0.5, 0.0}, {100, 30}, Process::AuxNoBlock), (MicroState{0, 50, 0}));
}

TEST(Process, NamesRoundTrip) {
  for (Process p : {Process::Main, Process::AuxSaturated, Process::AuxNoBlock}) {
    EXPECT_EQ(parse_process(to_string(p)), p);
  }
  EXPECT_FALSE(parse_process("other").has_value());
}
