#include <benchmark/benchmark.h>

#include "heatrec/forms.hpp"
#include "heatrec/harness.hpp"
#include "heatrec/linalg.hpp"
#include "heatrec/solvers.hpp"

namespace {

using namespace heatrec;

forms::AssimConfig bench_config(int cells, int steps, double gamma_1) {
  forms::AssimConfig cfg;
  cfg.gamma_1 = gamma_1;
  cfg.n_steps = steps;
  cfg.final_time = 0.02;
  cfg.mesh = fem::Mesh1D(cells);
  return cfg;
}

void BM_AssembleKkt(benchmark::State& state) {
  const forms::Discretization d(bench_config(static_cast<int>(state.range(0)), 16, 1.0));
  const auto data = harness::generate_data(d, harness::ExactSolution{2}, {});
  for (auto _ : state) {
    auto sys = forms::assemble_kkt(d, data);
    benchmark::DoNotOptimize(sys.rhs.data());
  }
}
BENCHMARK(BM_AssembleKkt)->Arg(50)->Arg(100)->Arg(200);

void BM_KktApply(benchmark::State& state) {
  const forms::Discretization d(bench_config(static_cast<int>(state.range(0)), 16, 1.0));
  const auto data = harness::generate_data(d, harness::ExactSolution{2}, {});
  const auto sys = forms::assemble_kkt(d, data);
  linalg::DenseVector x(sys.map.size(), 1.0), y(sys.map.size());
  for (auto _ : state) {
    sys.matrix.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_KktApply)->Arg(50)->Arg(100)->Arg(200);

void BM_ForwardSweep(benchmark::State& state) {
  const forms::Discretization d(bench_config(static_cast<int>(state.range(0)), 16, 0.0));
  const auto data = harness::generate_data(d, harness::ExactSolution{2}, {});
  const auto phi = harness::default_initial_guess(d, harness::ExactSolution{2});
  for (auto _ : state) {
    auto u = solvers::forward_heat(d, phi, data);
    benchmark::DoNotOptimize(u.levels.data());
  }
}
BENCHMARK(BM_ForwardSweep)->Arg(50)->Arg(100)->Arg(200);

void BM_MonolithicMinres(benchmark::State& state) {
  const forms::Discretization d(bench_config(static_cast<int>(state.range(0)), 8, 0.0));
  const auto data = harness::generate_data(d, harness::ExactSolution{2}, {});
  for (auto _ : state) {
    auto sol = solvers::solve_monolithic(d, data);
    benchmark::DoNotOptimize(sol.report.iterations);
  }
}
BENCHMARK(BM_MonolithicMinres)->Arg(25)->Arg(50);

void BM_GradientDescentStep(benchmark::State& state) {
  const forms::Discretization d(bench_config(static_cast<int>(state.range(0)), 16, 1.0));
  const auto data = harness::generate_data(d, harness::ExactSolution{2}, {});
  const auto phi = harness::default_initial_guess(d, harness::ExactSolution{2});
  solvers::GdOptions opt;
  opt.max_iterations = 1;
  opt.stop_on_z1_increase = false;
  for (auto _ : state) {
    auto sol = solvers::solve_gradient_descent(d, data, phi, opt);
    benchmark::DoNotOptimize(sol.report.residual_norm);
  }
}
BENCHMARK(BM_GradientDescentStep)->Arg(50)->Arg(100)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
