#include <benchmark/benchmark.h>

#include <random>

#include "scbal/solver.hpp"

namespace {

using namespace scbal;

std::pair<Matrix, Vector> random_problem(Eigen::Index periods, Eigen::Index donors) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(periods, donors);
  Vector y(periods);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = normal(rng);
  return {x, y};
}

void BM_ProjectToSimplex(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (double& x : v) x = normal(rng);
  std::vector<double> out, scratch;
  for (auto _ : state) {
    project_to_simplex_into(v, out, scratch);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectToSimplex)->RangeMultiplier(4)->Range(4, 4096)->Complexity(benchmark::oNLogN);

void BM_FitFixedStep(benchmark::State& state) {
  const auto [x, y] = random_problem(state.range(0), state.range(1));
  for (auto _ : state) {
    const FitResult r = fit_simplex_least_squares(x, y);
    benchmark::DoNotOptimize(r.objective);
  }
}
BENCHMARK(BM_FitFixedStep)->ArgsProduct({{10, 30, 100}, {3, 19, 50}});

void BM_FitBacktracking(benchmark::State& state) {
  const auto [x, y] = random_problem(state.range(0), state.range(1));
  SolverConfig config;
  config.step_rule = StepRule::Backtracking;
  for (auto _ : state) {
    const FitResult r = fit_simplex_least_squares(x, y, config);
    benchmark::DoNotOptimize(r.objective);
  }
}
BENCHMARK(BM_FitBacktracking)->ArgsProduct({{30}, {3, 19, 50}});

void BM_LargestEigenvalue(benchmark::State& state) {
  const auto [x, y] = random_problem(30, state.range(0));
  const Matrix gram = x.transpose() * x;
  for (auto _ : state) benchmark::DoNotOptimize(largest_eigenvalue(gram).eigenvalue);
}
BENCHMARK(BM_LargestEigenvalue)->Arg(19)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
