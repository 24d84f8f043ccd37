#include <benchmark/benchmark.h>

#include <cmath>

#include "svpde/funcalc.hpp"
#include "svpde/functionals.hpp"
#include "svpde/parallel.hpp"
#include "svpde/sde.hpp"

using namespace svpde;

namespace {

MarkovSde ou() {
    return MarkovSde::scalar([](double, double x) { return -x + std::sin(x); },
                             [](double, double x) { return 1.0 + 0.5 * std::sin(x); });
}

PathSde window_sde() {
    return {PathCoefficient::of_window([](double, const Path& w) { return -w.oldest() + 0.1 * w.present(); }),
            PathCoefficient::constant(1.0), {}};
}

void set_items(benchmark::State& state, int paths, int steps) {
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(paths) * steps);
}

void BM_EulerMarkovReference(benchmark::State& state) {
    const int paths = static_cast<int>(state.range(0)), steps = 100;
    const Grid grid(0.0, 1.0, steps);
    const NoiseBundle noise(paths, steps, 1, grid.dt, 1);
    const std::vector<double> x0{0.2};
    for (auto _ : state) benchmark::DoNotOptimize(euler_markov_reference(ou(), x0, grid, noise).x.data());
    set_items(state, paths, steps);
}

void BM_EulerMarkovOpenMP(benchmark::State& state) {
    const int paths = static_cast<int>(state.range(0)), steps = 100;
    set_threads(static_cast<int>(state.range(1)));
    const Grid grid(0.0, 1.0, steps);
    const NoiseBundle noise(paths, steps, 1, grid.dt, 1);
    const std::vector<double> x0{0.2};
    for (auto _ : state) benchmark::DoNotOptimize(euler_markov(ou(), x0, grid, noise).x.data());
    set_items(state, paths, steps);
    set_threads(0);
}

void BM_EulerPathReference(benchmark::State& state) {
    const int paths = static_cast<int>(state.range(0)), steps = 50;
    const Grid grid(0.0, 1.0, steps);
    const NoiseBundle noise(paths, steps, 1, grid.dt, 2);
    const Path eta = Path::constant(1.0, steps + 1, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(euler_path_dependent_reference(window_sde(), eta, grid, noise).values.data());
    set_items(state, paths, steps);
}

void BM_EulerPathOpenMP(benchmark::State& state) {
    const int paths = static_cast<int>(state.range(0)), steps = 50;
    set_threads(static_cast<int>(state.range(1)));
    const Grid grid(0.0, 1.0, steps);
    const NoiseBundle noise(paths, steps, 1, grid.dt, 2);
    const Path eta = Path::constant(1.0, steps + 1, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(euler_path_dependent(window_sde(), eta, grid, noise).values.data());
    set_items(state, paths, steps);
    set_threads(0);
}

void BM_ItoResidual(benchmark::State& state) {
    const int paths = 200, steps = 1000;
    set_threads(static_cast<int>(state.range(0)));
    const Path eta = Path::from_function(1.0, 101, [](double x) { return 0.5 * std::sin(3.0 * x); });
    const Grid grid(0.0, 1.0, steps);
    const auto sim = euler_path_dependent({PathCoefficient::constant(0.0), PathCoefficient::constant(1.0), {}}, eta,
                                          grid, NoiseBundle(paths, steps, 1, grid.dt, 3));
    const auto U = FunctionalSpec::cylindrical(cylindrical_test_functional(1.0), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(ito_residual(U, sim).mean.value);
    set_items(state, paths, steps);
    set_threads(0);
}

}  // namespace

BENCHMARK(BM_EulerMarkovReference)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EulerMarkovOpenMP)->ArgsProduct({{10000, 100000}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EulerPathReference)->Arg(2000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EulerPathOpenMP)->ArgsProduct({{2000}, {1, 2, 4, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ItoResidual)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
