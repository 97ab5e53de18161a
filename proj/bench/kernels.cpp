#include <benchmark/benchmark.h>

#include "tauh2/convergence.hpp"
#include "tauh2/diagnostics.hpp"
#include "tauh2/quadrature.hpp"

using namespace tauh2;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

DdaeSystem conv(std::array<int, 4> delta) {
    ExampleId id{ExampleTag::ConvSys};
    id.delta = delta;
    return build_example(id).system;
}

void torus_grid(benchmark::State& state) {
    std::vector<Matrix> A;
    for (int k = 0; k < 3; ++k) A.push_back(Matrix::Random(4, 4) * 0.3);
    TorusSearch search;
    search.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(essential_radius(A, search).rho);
}

void oracle_panels(benchmark::State& state) {
    const DdaeSystem sys = build_example({ExampleTag::Rdde2}).system;
    OracleOptions opt;
    opt.rel_tol = 1e-9;
    opt.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(h2_quadrature(sys, opt).norm);
}

void degree_sweep(benchmark::State& state) {
    const DdaeSystem sys = conv({1, 1, 0, 0});
    const auto degrees = parse_degree_range("8:4:48");
    for (auto _ : state) benchmark::DoNotOptimize(norm_sweep(sys, degrees, Mode::Polynomial, true, exec_of(state)));
}

}  // namespace

// Argument 0 is the serial reference, 1 the OpenMP kernel.
BENCHMARK(torus_grid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(oracle_panels)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(degree_sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
