#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "shearflame/effective.hpp"

using namespace shearflame;

namespace {

ScalarField wavy(const TorusGrid& g) {
  return ScalarField::sample(g, [](std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += 0.2 * std::sin(2.0 * std::numbers::pi * xi);
    return s;
  });
}

void BM_Curvature(benchmark::State& state) {
  TorusGrid g(2, static_cast<int>(state.range(0)));
  const auto v = wavy(g);
  const auto dir = vertical_direction(2);
  for (auto _ : state) benchmark::DoNotOptimize(curvature_kappa(v, dir));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_Curvature)->Arg(32)->Arg(64)->Arg(128);

void BM_OperatorEvaluate(benchmark::State& state) {
  TorusGrid g(2, static_cast<int>(state.range(0)));
  const auto f = cellular_profile(2, g);
  GOperator op(vertical_direction(2), PhysParams{0.2, 1.0, true}, f);
  const auto v = wavy(g);
  std::vector<double> rhs(g.size());
  std::vector<double> stiffness(g.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(op.evaluate(v.values(), rhs, {}, {}, stiffness));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_OperatorEvaluate)->Arg(32)->Arg(64)->Arg(128);

void BM_DiscountedSolve(benchmark::State& state) {
  TorusGrid g(2, static_cast<int>(state.range(0)));
  const auto f = cellular_profile(2, g);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_discounted(0.05, vertical_direction(2), PhysParams{0.2, 0.3, true}, f));
  }
}
BENCHMARK(BM_DiscountedSolve)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_InviscidQuadrature(benchmark::State& state) {
  const auto f = profile_from_function(
      TorusGrid(1, 4096),
      [](std::span<const double> x) { return std::cos(2.0 * std::numbers::pi * x[0]) - 1.0; },
      "bump");
  for (auto _ : state) benchmark::DoNotOptimize(inviscid_hbar_1d(Direction{{2.0}, 1.0}, 0.5, f));
}
BENCHMARK(BM_InviscidQuadrature);

}  // namespace

BENCHMARK_MAIN();
