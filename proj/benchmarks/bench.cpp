#include <benchmark/benchmark.h>

#include "popcache/kkt.hpp"
#include "popcache/search.hpp"
#include "popcache/simulate.hpp"

using namespace popcache;

namespace {

SystemConfig scenario1(std::int64_t k) { return make_config(6000, k, 50, 0.1, 0.1, 100000, 40); }

void BM_BuildPopularity(benchmark::State& state) {
    const std::int64_t n = state.range(0);
    for (auto _ : state) {
        auto m = build_popularity(n, 0.8);
        benchmark::DoNotOptimize(m.prefix.back());
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_BuildPopularity)->Arg(6000)->Arg(100000)->Arg(1000000)->Complexity();

void BM_SolveLevels(benchmark::State& state) {
    auto cfg = scenario1(2000);
    auto model = build_popularity(6000, 1.0);
    Segmentation seg{4, {0, 157, 1278, 6000}};
    auto blocks = coded_blocks(cfg, model, seg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(optimal_blocks_delay_or_inf(cfg, 0.0, blocks));
    }
}
BENCHMARK(BM_SolveLevels);

void BM_OptimizeBoundaries(benchmark::State& state) {
    auto cfg = scenario1(1000);
    auto model = build_popularity(6000, 0.6);
    const int q = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto r = optimize_boundaries(cfg, model, q);
        benchmark::DoNotOptimize(r.delay);
    }
}
BENCHMARK(BM_OptimizeBoundaries)->Arg(2)->Arg(3)->Arg(4);

void BM_OptimizeAll(benchmark::State& state) {
    auto cfg = scenario1(2000);
    auto model = build_popularity(6000, 1.0);
    for (auto _ : state) {
        Solution sol = optimize_all(cfg, model, 8);
        benchmark::DoNotOptimize(sol.expected_delay);
    }
}
BENCHMARK(BM_OptimizeAll);

void BM_SimulationTrial(benchmark::State& state) {
    auto cfg = scenario1(2000);
    auto model = build_popularity(6000, 1.0);
    Solution sol = optimize_all(cfg, model, 8);
    std::uint64_t t = 0;
    for (auto _ : state) {
        auto s = sample_demand(model, sol.seg, cfg.K, stream_seed(1, t++));
        benchmark::DoNotOptimize(realized_delay(cfg, sol.seg, sol.alloc, s));
    }
}
BENCHMARK(BM_SimulationTrial);

}  // namespace

BENCHMARK_MAIN();
