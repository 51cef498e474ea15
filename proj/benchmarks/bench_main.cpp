#include <benchmark/benchmark.h>

#include <random>

#include "iml/dependence.hpp"
#include "iml/dgp.hpp"
#include "iml/effects.hpp"
#include "iml/importance.hpp"
#include "iml/learners.hpp"

using namespace iml;

static void BM_ForestFit(benchmark::State& state) {
  const Dataset d = sample(find_dgp("fig5_masked"), state.range(0), RngSeed{1});
  for (auto _ : state) benchmark::DoNotOptimize(fit(forest_spec(50), d, RngSeed{2}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForestFit)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_ForestPredict(benchmark::State& state) {
  const Dataset d = sample(find_dgp("fig5_masked"), 1000, RngSeed{1});
  const FittedModel m = fit(forest_spec(100), d, RngSeed{2});
  const Dataset q = sample(find_dgp("fig5_masked"), state.range(0), RngSeed{3});
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(q.features()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForestPredict)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Pfi(benchmark::State& state) {
  const Dataset d = sample(find_dgp("fig6_flat"), 1000, RngSeed{1});
  const FittedModel m = fit(forest_spec(50), d, RngSeed{2});
  for (auto _ : state) benchmark::DoNotOptimize(pfi(m.predictor(), d, Loss(), 5, RngSeed{3}));
}
BENCHMARK(BM_Pfi)->Unit(benchmark::kMillisecond);

static void BM_Ice(benchmark::State& state) {
  const Dataset d = sample(find_dgp("fig5_masked"), 1000, RngSeed{1});
  const FittedModel m = fit(forest_spec(50), d, RngSeed{2});
  const Grid g = build_grid(d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ice(m.predictor(), d, g));
}
BENCHMARK(BM_Ice)->Unit(benchmark::kMillisecond);

static void BM_ShapleySampled(benchmark::State& state) {
  const Dataset d = sample(find_dgp("fig5_masked"), 500, RngSeed{1});
  const FittedModel m = fit(forest_spec(50), d, RngSeed{2});
  const Dataset bg = background_sample(d, RngSeed{3}, 100);
  const std::vector<double> x = {0.1, -0.4, 0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(shapley_sampled(m.predictor(), bg, x, static_cast<int>(state.range(0)), RngSeed{4}));
  }
}
BENCHMARK(BM_ShapleySampled)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Hsic(benchmark::State& state) {
  const Dataset d = sample(find_dgp("ring_dependence"), state.range(0), RngSeed{1});
  const auto a = column_values(d.features(), 0);
  const auto b = column_values(d.features(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(hsic(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hsic)->Arg(100)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
