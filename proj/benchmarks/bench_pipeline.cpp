#include <benchmark/benchmark.h>

#include "skyfleet/bev.hpp"
#include "skyfleet/harness.hpp"
#include "skyfleet/scene.hpp"

using namespace skyfleet;

static void BM_RenderView(benchmark::State& state) {
    SceneParams params;
    DroneRigParams rig;
    const Scene scene = generate_scene(1, params, rig);
    for (auto _ : state) benchmark::DoNotOptimize(render_view(scene.cameras[0], scene.tracks, 0));
    state.SetItemsProcessed(state.iterations() * rig.image_width * rig.image_height);
}
BENCHMARK(BM_RenderView);

static void BM_GenerateBev(benchmark::State& state) {
    ScenarioConfig cfg;
    cfg.seed = 1;
    const Scene scene = generate_scene(cfg.seed, cfg.scene, cfg.rig);
    const RenderedView view = render_view(scene.cameras[0], scene.tracks, 0);
    for (auto _ : state)
        benchmark::DoNotOptimize(generate_bev(view, scene.cameras[0], GbgMode::GroundPrior,
                                              cfg.gbg.height_bins, 0.0, cfg.gbg.depth_bins,
                                              cfg.voxel_spec(), scene.bev_poses[0]));
}
BENCHMARK(BM_GenerateBev);

static void BM_RunScenario(benchmark::State& state) {
    ScenarioConfig cfg;
    cfg.seed = 1;
    cfg.rig.image_width = 96;
    cfg.rig.image_height = 72;
    cfg.collab_mode = static_cast<CollabMode>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(cfg));
}
BENCHMARK(BM_RunScenario)
    ->Arg(static_cast<int>(CollabMode::None))
    ->Arg(static_cast<int>(CollabMode::Early))
    ->Arg(static_cast<int>(CollabMode::Sisw));
