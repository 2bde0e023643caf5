#include <benchmark/benchmark.h>

#include "orbitlab/lens_space.hpp"

using namespace orbitlab;

namespace {

ScanGrid grid(std::size_t samples, double wall) {
  ScanGrid g;
  g.samples = samples;
  g.speeds = {0.2, 0.5, 1.0};
  g.wall = wall;
  return g;
}

void BM_LensScan(benchmark::State& state, Execution exec) {
  const LensSpace L = LensSpace::make(3);
  const ScanGrid g = grid(static_cast<std::size_t>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(lens_short_orbit_scan(L, MagneticParams{0.1}, g, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BounceScan(benchmark::State& state, Execution exec) {
  const LensSpace L = LensSpace::make(3);
  const ScanGrid g = grid(static_cast<std::size_t>(state.range(0)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(zp_symmetric_bounce_scan(L, MagneticParams{0.1}, 0.1, g, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_LensScan, serial, Execution::kSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_LensScan, parallel, Execution::kParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BounceScan, serial, Execution::kSerial)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BounceScan, parallel, Execution::kParallel)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
