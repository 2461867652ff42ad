#include <benchmark/benchmark.h>

#include "scbal/harness.hpp"

namespace {

using namespace scbal;

ExperimentSpec default_spec(std::size_t reps) {
  ExperimentSpec spec;
  FactorModelParams& p = spec.params;
  p.n = 20;
  p.t0 = 30;
  p.t_max = 40;
  p.delta.assign(41, 0.0);
  p.lambda.assign(41, 1.0);
  p.alpha.assign(10, 1.0);
  for (std::size_t i = 0; i < p.n; ++i) p.mu.push_back(-1.0 + 2.0 * double(i) / double(p.n - 1));
  p.sigma = Matrix::Constant(20, 41, 0.2);
  p.gamma = 2.0;
  spec.reps = reps;
  spec.workers = 1;
  return spec;
}

void BM_Replication(benchmark::State& state) {
  ExperimentSpec spec = default_spec(1);
  if (state.range(0) != 0) spec.estimators.push_back(EstimatorKind::FittedSC);
  std::size_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_replication(spec, index++));
}
BENCHMARK(BM_Replication)->Arg(0)->Arg(1);

void BM_Experiment(benchmark::State& state) {
  ExperimentSpec spec = default_spec(static_cast<std::size_t>(state.range(0)));
  spec.workers = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec).wall_time_s);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Experiment)->Args({1000, 1})->Args({1000, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
