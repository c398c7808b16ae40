#include "kelsim/linalg.hpp"
#include "kelsim/rng.hpp"

#include <benchmark/benchmark.h>

using namespace kelsim;

namespace {

ComplexMatrix random_matrix(int n, double scale) {
    RngStream rng(1234, static_cast<std::uint64_t>(n));
    ComplexMatrix m(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            m(i, j) = scale * Complex(rng.next_normal(), rng.next_normal());
        }
    }
    return m;
}

}  // namespace

static void BM_MatrixExponential(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ComplexMatrix a = random_matrix(n, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matrix_exponential(a));
    }
}
BENCHMARK(BM_MatrixExponential)->Arg(2)->Arg(8)->Arg(32)->Arg(128);

static void BM_PartialTrace(benchmark::State& state) {
    const int env = static_cast<int>(state.range(0));
    const ComplexMatrix joint = random_matrix(2 * env, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(partial_trace(joint, {2, env}, 0));
    }
}
BENCHMARK(BM_PartialTrace)->Arg(16)->Arg(64)->Arg(256);

static void BM_TraceDistance(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ComplexMatrix a = random_matrix(n, 1.0);
    a = (a * a.adjoint()).eval();
    a /= a.trace().real();
    ComplexMatrix b = random_matrix(n, 1.0);
    b = (b * b.adjoint()).eval();
    b /= b.trace().real();
    for (auto _ : state) {
        benchmark::DoNotOptimize(trace_distance(a, b));
    }
}
BENCHMARK(BM_TraceDistance)->Arg(2)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
