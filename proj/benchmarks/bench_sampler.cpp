#include "kelsim/noise_sampler.hpp"

#include <benchmark/benchmark.h>

using namespace kelsim;

namespace {

BathSpec bench_bath(int n_modes) {
    BathSpec bath;
    for (int k = 0; k < n_modes; ++k) {
        bath.modes.push_back(BathMode{0.6 + 0.4 * k, 1.0});
    }
    bath.coupling.emplace_back();
    for (int k = 0; k < n_modes; ++k) bath.coupling[0].push_back(0.3);
    bath.state = BathState::thermal_state(1.0);
    return bath;
}

}  // namespace

static void BM_ContourCovariance(benchmark::State& state) {
    const BathSpec bath = bench_bath(2);
    const TimeGrid grid{2.0, static_cast<int>(state.range(0))};
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_contour_covariance(bath, grid));
    }
}
BENCHMARK(BM_ContourCovariance)->Arg(16)->Arg(32)->Arg(64);

static void BM_TakagiFactor(benchmark::State& state) {
    const BathSpec bath = bench_bath(2);
    const TimeGrid grid{2.0, static_cast<int>(state.range(0))};
    const ContourCovariance cov = build_contour_covariance(bath, grid);
    for (auto _ : state) {
        benchmark::DoNotOptimize(takagi_factor(cov.matrix, 1e-10));
    }
}
BENCHMARK(BM_TakagiFactor)->Arg(16)->Arg(32)->Arg(64);

static void BM_SampleTrajectory(benchmark::State& state) {
    const BathSpec bath = bench_bath(2);
    const TimeGrid grid{2.0, static_cast<int>(state.range(0))};
    const NoiseSampler sampler(bath, grid, SamplerConfig{});
    std::uint64_t index = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sampler.sample(index++));
    }
}
BENCHMARK(BM_SampleTrajectory)->Arg(16)->Arg(32)->Arg(64);
