#include <benchmark/benchmark.h>

#include <random>

#include "skyfleet/geometry.hpp"
#include "skyfleet/metrics.hpp"
#include "skyfleet/scene.hpp"

using namespace skyfleet;

namespace {

CameraModel rig_camera(int width, int height) {
    SceneParams scene;
    scene.instance_count = 0;
    DroneRigParams rig;
    rig.image_width = width;
    rig.image_height = height;
    return generate_scene(1, scene, rig).cameras[0];
}

}  // namespace

static void BM_GroundPriorMaps(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const CameraModel cam = rig_camera(w, w * 3 / 4);
    for (auto _ : state) benchmark::DoNotOptimize(ground_prior_maps(cam));
    state.SetItemsProcessed(state.iterations() * w * (w * 3 / 4));
}
BENCHMARK(BM_GroundPriorMaps)->Arg(256)->Arg(512);

static void BM_Hungarian(benchmark::State& state) {
    const size_t n = static_cast<size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dc(0.0, 1.0);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (auto& row : cost)
        for (double& c : row) c = dc(rng);
    for (auto _ : state) benchmark::DoNotOptimize(hungarian(cost));
}
BENCHMARK(BM_Hungarian)->Arg(8)->Arg(32)->Arg(64);
