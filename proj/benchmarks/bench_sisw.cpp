#include <benchmark/benchmark.h>

#include <random>

#include "skyfleet/scene.hpp"
#include "skyfleet/sisw.hpp"

using namespace skyfleet;

namespace {

ScalarGrid random_grid(int nx, int ny) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> df(-2.0f, 2.0f);
    ScalarGrid g(nx, ny);
    for (float& v : g.v) v = df(rng);
    return g;
}

}  // namespace

static void BM_InfoVolume(benchmark::State& state) {
    const ScalarGrid g = random_grid(200, 200);
    const int window = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(info_volume(g, window));
    state.SetItemsProcessed(state.iterations() * g.cells() * window * window);
}
BENCHMARK(BM_InfoVolume)->Arg(3)->Arg(5)->Arg(7);

static void BM_SelectTopk(benchmark::State& state) {
    const ScalarGrid g = random_grid(200, 200);
    for (auto _ : state) benchmark::DoNotOptimize(select_topk(g, 0.25));
}
BENCHMARK(BM_SelectTopk);

static void BM_PacketRoundTrip(benchmark::State& state) {
    const GridSpec grid = GridSpec::long_range();
    const ScalarGrid scores = random_grid(grid.nx, grid.ny);
    BevGrid features(grid, kFeatureChannels);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> df(-1.0f, 1.0f);
    for (float& v : features.data) v = df(rng);
    const auto cells = select_topk(scores, 0.25);
    const SparsePacket packet = make_packet(0, 0, {}, features, cells);
    for (auto _ : state) {
        const auto wire = serialize_packet(packet);
        benchmark::DoNotOptimize(deserialize_packet(wire, grid));
    }
    state.SetBytesProcessed(state.iterations() *
                            static_cast<int64_t>(packet_wire_size(cells.size(), kFeatureChannels)));
}
BENCHMARK(BM_PacketRoundTrip);
