#include <benchmark/benchmark.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "modred/beam.hpp"
#include "modred/freqresp.hpp"
#include "modred/reduction.hpp"
#include "modred/synthesis.hpp"

using namespace modred;

namespace {

InterconnectedSystem beams(int scale) {
    return build_three_beam_system(three_beam_specs({10 * scale, 4 * scale, 6 * scale}));
}

void BM_Lyapunov(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    Matrix a = Matrix::NullaryExpr(n, n, [&] { return normal(rng); });
    a -= (a.eigenvalues().real().maxCoeff() + 1.0) * Matrix::Identity(n, n);
    const Matrix b = Matrix::NullaryExpr(n, 2, [&] { return normal(rng); });
    const Matrix q = b * b.transpose();
    for (auto _ : state) benchmark::DoNotOptimize(solve_lyapunov(a, q));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Lyapunov)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNCubed);

void BM_FreqResponseDirect(benchmark::State& state) {
    const auto g = lft_close(beams(static_cast<int>(state.range(0))));
    const auto grid = make_log_grid(316.2, 1e5, 100);
    for (auto _ : state) {
        for (std::size_t i = 0; i < grid.size(); ++i) benchmark::DoNotOptimize(freq_response(g, grid[i]));
    }
    state.counters["states"] = static_cast<double>(g.states());
}
BENCHMARK(BM_FreqResponseDirect)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_FreqResponseSweep(benchmark::State& state) {
    const auto g = lft_close(beams(static_cast<int>(state.range(0))));
    const auto grid = make_log_grid(316.2, 1e5, 100);
    for (auto _ : state) benchmark::DoNotOptimize(sweep_response(g, grid));
    state.counters["states"] = static_cast<double>(g.states());
}
BENCHMARK(BM_FreqResponseSweep)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_SynthesizePoint(benchmark::State& state) {
    const auto sys = beams(5);
    const auto req = beam_requirement(sys, {.points = 8});
    const auto blocks = BlockStructure::of(sys);
    const std::size_t i = static_cast<std::size_t>(state.range(0));
    const auto n = compute_N(sys, req.grid[i]);
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthesize_point(n, blocks, req.v_c[i], req.w_c[i], {}));
    }
}
BENCHMARK(BM_SynthesizePoint)->Arg(0)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ReduceSubsystem(benchmark::State& state) {
    const auto sys = beams(1);
    const auto req = beam_requirement(sys, {.points = 40});
    const auto sol = synthesize_requirements(sys, req);
    ReductionOptions opt;
    opt.method = state.range(0) == 0 ? ReductionMethod::bt : ReductionMethod::fwbt;
    for (auto _ : state) benchmark::DoNotOptimize(reduce_to_requirement(sys.subsystems()[0], sol, 0, opt));
    state.SetLabel(std::string(to_string(opt.method)));
}
BENCHMARK(BM_ReduceSubsystem)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
