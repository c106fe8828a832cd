#include <benchmark/benchmark.h>

#include "ymlab/functional.hpp"

namespace {

using namespace ym;

template <class G>
static void BM_Gradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  TorusGrid grid(n, n, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(1);
  Configuration<G> cfg(grid);
  cfg.A = randomField1<G>(grid, rng);
  cfg.omega = randomField0<G>(grid, rng);
  PerturbationSpec pert;
  pert.amplitude = 0.3;
  pert.loops = {cycleX(grid, 0), cycleY(grid, 0)};
  for (auto _ : state) {
    auto g = gradient(cfg, pert);
    benchmark::DoNotOptimize(g.gA.c1.sum());
  }
}
BENCHMARK(BM_Gradient<U1>)->Arg(8)->Arg(16);
BENCHMARK(BM_Gradient<SU2>)->Arg(8)->Arg(16);

template <class G>
static void BM_HolonomyHessianVec(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  TorusGrid grid(n, n, 2 * M_PI, 2 * M_PI);
  auto rng = makeRng(2);
  Configuration<G> cfg(grid);
  cfg.A = randomField1<G>(grid, rng);
  cfg.omega = randomField0<G>(grid, rng);
  const Field1<G> alpha = randomField1<G>(grid, rng);
  const Field0<G> v = randomField0<G>(grid, rng);
  PerturbationSpec pert;
  pert.amplitude = 0.3;
  pert.loops = {cycleX(grid, 0, 1.0, Profile::ReTrace, 1), cycleY(grid, 0)};
  for (auto _ : state) {
    auto d = applyPerturbationHessian(grid, cfg.A, cfg.omega, pert, alpha, v);
    benchmark::DoNotOptimize(d.dX.c1.sum());
  }
}
BENCHMARK(BM_HolonomyHessianVec<U1>)->Arg(16);
BENCHMARK(BM_HolonomyHessianVec<SU2>)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
