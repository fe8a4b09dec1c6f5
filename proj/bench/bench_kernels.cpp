// Serial reference vs OpenMP kernels.
// Run: ./build/bench/bench_kernels [--benchmark_filter=...]; OMP_NUM_THREADS sets the pool.

#include <benchmark/benchmark.h>

#include <numbers>

#include "spincat/open_quantum.hpp"
#include "spincat/phase_space.hpp"

using namespace spincat;

namespace {

KernelMode mode_of(const benchmark::State& state) {
  return state.range(0) == 0 ? KernelMode::serial : KernelMode::parallel;
}

FockState kerr_cat(double alpha) {
  const auto psi = coherent_state(alpha, default_truncation(alpha * alpha));
  return evolve(psi, EtaExpansion::kerr(2.44), std::numbers::pi / (2.0 * 2.44));
}

void BM_HusimiPure(benchmark::State& state) {
  const auto psi = kerr_cat(10.0);
  const auto spec = GridSpec::for_alpha(10.0, 256, 512);
  for (auto _ : state) benchmark::DoNotOptimize(q_function(psi, spec, mode_of(state)));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_HusimiDensity(benchmark::State& state) {
  const auto rho = DensityMatrix::from_pure(kerr_cat(7.0));
  const auto spec = GridSpec::for_alpha(7.0, 96, 192);
  for (auto _ : state) benchmark::DoNotOptimize(q_function(rho, spec, mode_of(state)));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_Ensemble(benchmark::State& state) {
  TrajectoryConfig cfg;
  cfg.eta = EtaExpansion::kerr(2.44);
  cfg.alpha = 10.0;
  cfg.L1 = 0.025 / (std::numbers::pi / (2.0 * 2.44));
  cfg.t_final = std::numbers::pi / 2.44;
  cfg.n_traj = 2000;
  cfg.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(cfg, mode_of(state)));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

}  // namespace

BENCHMARK(BM_HusimiPure)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HusimiDensity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
