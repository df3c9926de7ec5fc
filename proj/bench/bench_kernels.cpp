// OpenMP kernels against their serial references. On a single core the two
// should match; the parallel speedup shows up with more threads.

#include "refdiff/montecarlo.hpp"
#include "refdiff/spectral.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

namespace {

using namespace refdiff;

const DiffusionModel kModel{ConstantDrift{1.0}, ConstantSq{1.0}, TwoBarrier{1.0}};
const AdditiveFunctional kUpper{ZeroCost{}, 0.0, 1.0};

McConfig bench_mc() {
    McConfig mc;
    mc.dt = 1e-3;
    mc.horizon_t = 20.0;
    mc.replications = 64;
    return mc;
}

void BM_PsiCurveSerial(benchmark::State& state) {
    const auto thetas = default_theta_grid();
    for (auto _ : state) benchmark::DoNotOptimize(psi_curve_serial(kModel, kUpper, thetas, {}));
}

void BM_PsiCurveParallel(benchmark::State& state) {
    const auto thetas = default_theta_grid();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(psi_curve(kModel, kUpper, thetas, {}));
}

void BM_ReplicationsSerial(benchmark::State& state) {
    const auto mc = bench_mc();
    for (auto _ : state) benchmark::DoNotOptimize(simulate_replications_serial(kModel, kUpper, mc));
    state.SetItemsProcessed(state.iterations() * mc.replications * step_count(mc));
}

void BM_ReplicationsParallel(benchmark::State& state) {
    const auto mc = bench_mc();
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_replications(kModel, kUpper, mc));
    state.SetItemsProcessed(state.iterations() * mc.replications * step_count(mc));
}

}  // namespace

BENCHMARK(BM_PsiCurveSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PsiCurveParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicationsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicationsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
