#include <benchmark/benchmark.h>

#include "kronest/cluttergen.hpp"
#include "kronest/detect.hpp"
#include "kronest/estimators.hpp"
#include "kronest/shrinkage.hpp"
#include "test_support.hpp"

namespace kronest {
namespace {

SampleSet bench_samples(Index n_st, Index n_p, std::size_t L) {
    Rng rng(2024);
    return testing::cg_samples(rng, testing::random_kron(rng, n_st, n_p), L);
}

// Args: N_st, L. N_p = 3 throughout.
void BM_RskeSolve(benchmark::State& state) {
    const auto n_st = static_cast<Index>(state.range(0));
    const auto L = static_cast<std::size_t>(state.range(1));
    const SampleSet s = bench_samples(n_st, 3, L);
    ShrinkageFactors rho;
    rho.st = 0.3;
    rho.p = 0.2;
    SolverConfig cfg;
    cfg.track_cost = false;
    for (auto _ : state) benchmark::DoNotOptimize(rske(s, rho, cfg));
}
BENCHMARK(BM_RskeSolve)->Args({8, 8})->Args({8, 16})->Args({32, 16})->Args({64, 32});

void BM_CvFast(benchmark::State& state) {
    const SampleSet s = bench_samples(static_cast<Index>(state.range(0)), 3, 16);
    const PlugIn plug = PlugIn::from_samples(s, PlugInSource::knscm);
    for (auto _ : state) benchmark::DoNotOptimize(cv_factors_fast(s, plug));
}
BENCHMARK(BM_CvFast)->Arg(8)->Arg(32);

void BM_CvNaive(benchmark::State& state) {
    const SampleSet s = bench_samples(static_cast<Index>(state.range(0)), 3, 16);
    const PlugIn plug = PlugIn::from_samples(s, PlugInSource::knscm);
    for (auto _ : state) benchmark::DoNotOptimize(cv_factors_naive(s, plug));
}
BENCHMARK(BM_CvNaive)->Arg(8)->Arg(32);

void BM_Koas(benchmark::State& state) {
    const SampleSet s = bench_samples(static_cast<Index>(state.range(0)), 3, 16);
    const PlugIn plug = PlugIn::from_samples(s, PlugInSource::knscm);
    for (auto _ : state) benchmark::DoNotOptimize(koas_factors(plug, s.size()));
}
BENCHMARK(BM_Koas)->Arg(8)->Arg(32);

void BM_Knscm(benchmark::State& state) {
    const SampleSet s = bench_samples(static_cast<Index>(state.range(0)), 3, 16);
    for (auto _ : state) benchmark::DoNotOptimize(knscm(s));
}
BENCHMARK(BM_Knscm)->Arg(8)->Arg(32);

void BM_SampleDraw(benchmark::State& state) {
    SceneConfig cfg;
    cfg.radar.n_t = static_cast<int>(state.range(0));
    const Scene scene(cfg);
    std::uint64_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(scene.draw(7, i++));
}
BENCHMARK(BM_SampleDraw)->Arg(8)->Arg(32);

void BM_NmfStatistic(benchmark::State& state) {
    Rng rng(5);
    const KroneckerCov r = testing::random_kron(rng, static_cast<Index>(state.range(0)), 3);
    const InverseOperator inv(r);
    const DataMatrix s = rng.complex_normal_matrix(3, r.n_st());
    const DataMatrix y = rng.complex_normal_matrix(3, r.n_st());
    for (auto _ : state) benchmark::DoNotOptimize(nmf_statistic(s, y, inv));
}
BENCHMARK(BM_NmfStatistic)->Arg(8)->Arg(64);

}  // namespace
}  // namespace kronest

BENCHMARK_MAIN();
