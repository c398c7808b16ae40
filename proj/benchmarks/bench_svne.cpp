#include "kelsim/svne.hpp"

#include <benchmark/benchmark.h>

using namespace kelsim;

namespace {

struct BenchSetup {
    SystemSpec system;
    BathSpec bath;
    TimeGrid grid;

    explicit BenchSetup(int steps) : grid{2.0, steps} {
        system.h_s = 0.5 * pauli_z();
        system.couplings = {pauli_x()};
        bath.modes = {BathMode{1.0, 1.0}, BathMode{1.7, 1.0}};
        bath.coupling = {{0.3, 0.2}};
        bath.state = BathState::thermal_state(1.0);
    }
};

}  // namespace

static void BM_SvneTrajectory(benchmark::State& state) {
    const BenchSetup setup(static_cast<int>(state.range(0)));
    const InteractionPictureCache cache(setup.system, setup.grid);
    const NoiseSampler sampler(setup.bath, setup.grid, SamplerConfig{});
    const TrajectoryStepper stepper(cache, setup.grid, 1e6);

    ComplexMatrix rho0(2, 2);
    rho0 << 0.5, 0.5, 0.5, 0.5;

    std::uint64_t index = 0;
    for (auto _ : state) {
        const NoiseTrajectory noise = sampler.sample(index++);
        ComplexMatrix r = rho0;
        for (int s = 0; s < setup.grid.n_steps; ++s) {
            stepper.step_svne(r, noise.nu, noise.eta, s);
        }
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_SvneTrajectory)->Arg(32)->Arg(64)->Arg(128);

static void BM_Ensemble(benchmark::State& state) {
    const BenchSetup setup(32);
    const InteractionPictureCache cache(setup.system, setup.grid);
    const NoiseSampler sampler(setup.bath, setup.grid, SamplerConfig{});
    ComplexMatrix rho0(2, 2);
    rho0 << 0.5, 0.5, 0.5, 0.5;
    EnsembleOptions options;
    options.n_traj = state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_ensemble(cache, sampler, setup.grid, rho0, options));
    }
}
BENCHMARK(BM_Ensemble)->Arg(256)->Arg(1024);
