// Chamfer distance: OpenMP + k-d tree production path vs the serial
// brute-force reference, across cloud sizes.
#include <benchmark/benchmark.h>

#include "dpf/metrics.hpp"
#include "dpf/rng.hpp"

namespace {

dpf::PointCloud make_cloud(int n, uint64_t seed) {
    dpf::Rng rng(seed);
    dpf::PointCloud pc;
    pc.points = dpf::Matrix(n, 3);
    for (double& v : pc.points.data) v = rng.uniform(-0.5, 0.5);
    return pc;
}

void BM_chamfer_parallel(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto a = make_cloud(n, 1);
    const auto b = make_cloud(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(dpf::chamfer(a, b));
    state.SetComplexityN(n);
}

void BM_chamfer_serial_ref(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto a = make_cloud(n, 1);
    const auto b = make_cloud(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(dpf::chamfer_ref(a, b));
    state.SetComplexityN(n);
}

void BM_pairwise_cd_parallel(benchmark::State& state) {
    const int clouds = static_cast<int>(state.range(0));
    std::vector<dpf::PointCloud> gen, ref;
    for (int i = 0; i < clouds; ++i) {
        gen.push_back(make_cloud(512, 10 + i));
        ref.push_back(make_cloud(512, 100 + i));
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(dpf::pairwise_cloud_dist(gen, ref, dpf::CloudDist::Cd));
}

}  // namespace

BENCHMARK(BM_chamfer_parallel)->Arg(256)->Arg(1024)->Arg(4096)->Arg(16384)
    ->Complexity(benchmark::oNLogN);
BENCHMARK(BM_chamfer_serial_ref)->Arg(256)->Arg(1024)->Arg(4096)
    ->Complexity(benchmark::oNSquared);
BENCHMARK(BM_pairwise_cd_parallel)->Arg(8)->Arg(16);

BENCHMARK_MAIN();
