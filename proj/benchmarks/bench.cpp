#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "twolevel/ctmc.hpp"
#include "twolevel/exact.hpp"
#include "twolevel/fluid.hpp"
#include "twolevel/skorokhod.hpp"

using namespace twolevel;

namespace {

const ModelParams kSym{0.5, 1.0, 1.0, 1.0};

void BM_Step(benchmark::State& state) {
  const ScalingParams sc{400, 120};
  Rng rng(1);
  MicroState s{160, 120, 0};
  for (auto _ : state) {
    auto next = step(s, rng, kSym, sc);
    s = next->next;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Step);

void BM_Simulate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ScalingParams sc{n, (3 * n) / 10};
  std::uint64_t seed = 1;
  std::int64_t events = 0;
  for (auto _ : state) {
    const Trajectory traj = simulate({0, 0, 0}, kSym, sc, 50.0, seed++);
    events += static_cast<std::int64_t>(traj.event_count);
    benchmark::DoNotOptimize(traj);
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

void BM_Reflect(benchmark::State& state) {
  const auto points = static_cast<std::size_t>(state.range(0));
  SampledPath f{0.0, 1e-3, std::vector<double>(points)};
  for (std::size_t k = 0; k < points; ++k) f[k] = std::sin(1e-3 * static_cast<double>(k));
  for (auto _ : state) benchmark::DoNotOptimize(reflect_1d(f));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Reflect)->Arg(10'001)->Arg(1'000'001);

void BM_GbarApply(benchmark::State& state) {
  const PathFunctional g = gbar_functional(kSym, 0.3, 0.0, 0.0);
  const SampledPath x{0.0, 1e-3, std::vector<double>(10'001, 0.2)};
  for (auto _ : state) benchmark::DoNotOptimize(g.apply(x));
}
BENCHMARK(BM_GbarApply);

void BM_SolveGeneralized(benchmark::State& state) {
  const PathFunctional g = gbar_functional(kSym, 0.3, 0.0, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_generalized(g, 10.0, 1e-3));
}
BENCHMARK(BM_SolveGeneralized)->Unit(benchmark::kMillisecond);

void BM_StationarySolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Generator g = build_generator(kSym, {n, n / 2});
  for (auto _ : state) benchmark::DoNotOptimize(stationary_distribution(g));
  state.counters["states"] = static_cast<double>(g.size());
}
BENCHMARK(BM_StationarySolve)->Arg(4)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
