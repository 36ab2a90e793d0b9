#include <benchmark/benchmark.h>

#include "rcgrid/dataset.hpp"
#include "rcgrid/diagnostics.hpp"
#include "rcgrid/estimator.hpp"
#include "rcgrid/grid.hpp"
#include "rcgrid/kernels.hpp"
#include "rcgrid/rng.hpp"
#include "rcgrid/solver.hpp"

using namespace rcgrid;

namespace {

ChoiceDataset make_data(Index n) {
  Rng rng = make_stream(1, 0);
  return simulate_dataset(GaussianMixtureDGP::two_component_default(), n, 3, 2, rng);
}

void BM_BuildDesign(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  const auto grid = halton_grid(GridSpec::box(state.range(1), 2));
  for (auto _ : state) benchmark::DoNotOptimize(build_design(data, grid, OutcomeRows::inside));
}
BENCHMARK(BM_BuildDesign)->Args({1000, 25})->Args({1000, 100})->Args({1000, 500})->Unit(benchmark::kMillisecond);

void BM_FitPlain(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  const auto grid = halton_grid(GridSpec::box(state.range(1), 2));
  const auto reg = build_design(data, grid, OutcomeRows::inside);
  const auto model = QuadraticModel::from_least_squares(reg.design, reg.target);
  for (auto _ : state) benchmark::DoNotOptimize(fit_fixed_grid(reg, grid, {}, &model));
}
BENCHMARK(BM_FitPlain)->Args({1000, 25})->Args({1000, 100})->Args({1000, 500})->Unit(benchmark::kMillisecond);

void BM_FitPcr(benchmark::State& state) {
  const auto data = make_data(state.range(0));
  const auto grid = halton_grid(GridSpec::box(state.range(1), 2));
  const auto reg = build_design(data, grid, OutcomeRows::inside);
  const auto model = QuadraticModel::from_least_squares(reg.design, reg.target);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pcr(reg, grid, 5, {}, &model));
}
BENCHMARK(BM_FitPcr)->Args({1000, 25})->Args({1000, 100})->Args({1000, 500})->Unit(benchmark::kMillisecond);

void BM_QuadraticModel(benchmark::State& state) {
  const auto data = make_data(1000);
  const auto grid = halton_grid(GridSpec::box(state.range(0), 2));
  const auto reg = build_design(data, grid, OutcomeRows::inside);
  for (auto _ : state) benchmark::DoNotOptimize(QuadraticModel::from_least_squares(reg.design, reg.target));
}
BENCHMARK(BM_QuadraticModel)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_GramFromSample(benchmark::State& state) {
  Rng rng = make_stream(2, 0);
  const Matrix s = sample_design(halton_grid(GridSpec::box(state.range(0), 2)), KernelTag::logit, 1000, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gram_from_design(s));
}
BENCHMARK(BM_GramFromSample)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
