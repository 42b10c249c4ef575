#include <random>

#include "doctest.h"
#include "skyfleet/bev.hpp"
#include "test_util.hpp"

using namespace skyfleet;
using namespace skyfleet::testutil;

namespace {

RenderedView tiny_view(int width, int height, int channels) {
    RenderedView v;
    v.width = width;
    v.height = height;
    v.channels = channels;
    const size_t n = static_cast<size_t>(width) * height;
    v.class_map.assign(n, 0);
    v.instance_map.assign(n, 0);
    v.true_height.assign(n, 0.0f);
    v.hit_distance.assign(n, 1.0f);
    v.validity.assign(n, 1);
    v.feature.assign(n * channels, 0.0f);
    return v;
}

VoxelSpec default_voxels() {
    VoxelSpec spec;
    spec.plan = GridSpec::long_range();
    spec.z_min = 0.0;
    spec.z_res = 1.0;
    spec.nz = 10;
    return spec;
}

}  // namespace

TEST_SUITE_BEGIN("bev");

TEST_CASE("ground-level one-hot lift lands on the ground intersection") {
    const CameraModel cam = nadir_camera(30.0, 4, 3);
    const RenderedView view = render_view(cam, {}, 0);
    const HeightDistribution heights = oracle_height_estimator(view, 0.0, HeightBins{});
    const FrustumCandidates cands = lift(view, heights, cam);
    REQUIRE(cands.items.size() == view.validity.size());
    for (const auto& c : cands.items) {
        const int u = c.pixel % view.width, v = c.pixel / view.width;
        const Ray ray = pixel_ray(cam, u, v);
        const double d = *depth_upper_bound(cam, u, v);
        // bin center 0.05 m sits just above the exact ground point
        const Eigen::Vector3d ground = ray.origin + d * ray.direction;
        CHECK(std::abs(c.point.z()) <= 0.1);
        CHECK(std::abs(c.point.x() - ground.x()) <= 0.1);
        CHECK(std::abs(c.point.y() - ground.y()) <= 0.1);
        CHECK(c.weight == 1.0f);
    }
}

TEST_CASE("box-top pixels lift to the box height") {
    const CameraModel cam = nadir_camera(30.0, 64, 48);
    InstanceTrack box;
    box.id = 1;
    box.length = 8.0;
    box.width = 8.0;
    box.height = 2.0;
    box.poses = {Pose2{}};
    const RenderedView view = render_view(cam, {box}, 0);
    const HeightDistribution heights = oracle_height_estimator(view, 0.0, HeightBins{});
    const FrustumCandidates cands = lift(view, heights, cam);
    int box_pixels = 0;
    for (const auto& c : cands.items) {
        if (view.instance_map[static_cast<size_t>(c.pixel)] != 1) continue;
        ++box_pixels;
        CHECK(std::abs(c.point.z() - 2.0) <= 0.1);  // within one height bin
    }
    CHECK(box_pixels > 0);
}

TEST_CASE("depth-bin lift weights") {
    const CameraModel cam = nadir_camera(30.0, 4, 3);
    const RenderedView view = render_view(cam, {}, 0);
    const DepthBins bins;
    const FrustumCandidates uniform = lift_depth_bins(view, cam, bins, true);
    REQUIRE(uniform.items.size() == view.validity.size() * static_cast<size_t>(bins.count));
    for (const auto& c : uniform.items) CHECK(c.weight == doctest::Approx(0.01f));

    const FrustumCandidates oracle = lift_depth_bins(view, cam, bins, false);
    REQUIRE(oracle.items.size() == view.validity.size());
    for (const auto& c : oracle.items) {
        CHECK(c.weight == 1.0f);
        // candidate depth is the bin center nearest the true hit distance
        const double hit = view.hit_distance[static_cast<size_t>(c.pixel)];
        const double depth = (Eigen::Vector3d(c.point.x(), c.point.y(), c.point.z()) -
                              cam.translation)
                                 .norm();
        CHECK(std::abs(depth - hit) <= bins.width() / 2.0 + 1e-4);
    }
}

TEST_CASE("splat accumulation") {
    RenderedView view = tiny_view(2, 1, 2);
    view.feature = {1.0f, 2.0f, 5.0f, 6.0f};
    const VoxelSpec spec = default_voxels();

    SUBCASE("single candidate fills exactly one voxel") {
        FrustumCandidates cands;
        cands.view = &view;
        cands.channels = 2;
        cands.items.push_back({Eigen::Vector3f(0.1f, 0.2f, 0.5f), 1.0f, 0});
        const VoxelGrid grid = splat(cands, spec);
        int nonzero = 0;
        for (float f : grid.data) nonzero += f != 0.0f;
        CHECK(nonzero == 2);
        const float* cell = grid.at(100, 100, 0);
        CHECK(cell[0] == 1.0f);
        CHECK(cell[1] == 2.0f);
    }

    SUBCASE("weights 0.3 and 0.7 on one voxel reproduce the feature") {
        FrustumCandidates cands;
        cands.view = &view;
        cands.channels = 2;
        cands.items.push_back({Eigen::Vector3f(0.1f, 0.2f, 0.5f), 0.3f, 0});
        cands.items.push_back({Eigen::Vector3f(0.2f, 0.1f, 0.5f), 0.7f, 0});
        const VoxelGrid grid = splat(cands, spec);
        const float* cell = grid.at(100, 100, 0);
        CHECK(cell[0] == doctest::Approx(1.0f).epsilon(1e-6));
        CHECK(cell[1] == doctest::Approx(2.0f).epsilon(1e-6));
    }

    SUBCASE("cells are half-open: a boundary coordinate starts the next cell") {
        FrustumCandidates cands;
        cands.view = &view;
        cands.channels = 2;
        cands.items.push_back({Eigen::Vector3f(-49.5f, -49.75f, 0.5f), 1.0f, 0});
        const VoxelGrid grid = splat(cands, spec);
        CHECK(grid.at(1, 0, 0)[0] == 1.0f);
    }

    SUBCASE("out-of-extent candidates are dropped and counted") {
        FrustumCandidates cands;
        cands.view = &view;
        cands.channels = 2;
        cands.items.push_back({Eigen::Vector3f(1000.0f, 0.0f, 0.5f), 1.0f, 0});
        int64_t dropped = 0;
        const VoxelGrid grid = splat(cands, spec, Pose2{}, &dropped);
        CHECK(dropped == 1);
        for (float f : grid.data) CHECK(f == 0.0f);
    }
}

TEST_CASE("z pooling matches the naive sum") {
    VoxelSpec spec;
    spec.plan = GridSpec{0.0, 0.0, 1.0, 6, 5};
    spec.nz = 4;
    VoxelGrid grid(spec, 3);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<float> df(-2.0f, 2.0f);
    for (float& f : grid.data) f = df(rng);

    const BevGrid pooled = sum_pool_z(grid);
    for (int ix = 0; ix < spec.plan.nx; ++ix)
        for (int iy = 0; iy < spec.plan.ny; ++iy)
            for (int c = 0; c < 3; ++c) {
                float want = 0.0f;
                for (int iz = 0; iz < spec.nz; ++iz) want += grid.at(ix, iy, iz)[c];
                CHECK(pooled.at(ix, iy)[c] == want);
            }
}

TEST_CASE("generate_bev on an empty scene is empty") {
    const CameraModel cam = nadir_camera(30.0, 16, 12);
    const RenderedView view = render_view(cam, {}, 0);
    const BevGrid bev = generate_bev(view, cam, GbgMode::GroundPrior, HeightBins{}, 0.0,
                                     DepthBins{}, default_voxels(), Pose2{});
    for (float f : bev.data) CHECK(f == 0.0f);
}

TEST_CASE("single-box centroid lands within one long-grid cell") {
    const CameraModel cam = nadir_camera(50.0, 128, 96);
    InstanceTrack box;
    box.id = 1;
    box.length = 4.0;
    box.width = 2.0;
    box.height = 1.8;
    box.poses = {Pose2{3.2, -1.7, 0.4}};
    const RenderedView view = render_view(cam, {box}, 0);
    const BevGrid bev = generate_bev(view, cam, GbgMode::GroundPrior, HeightBins{}, 0.0,
                                     DepthBins{}, default_voxels(), Pose2{});
    double wsum = 0.0, cx = 0.0, cy = 0.0;
    for (int ix = 0; ix < bev.spec.nx; ++ix)
        for (int iy = 0; iy < bev.spec.ny; ++iy) {
            const float* f = bev.at(ix, iy);
            double n2 = 0.0;
            for (int c = 0; c < bev.channels; ++c) n2 += static_cast<double>(f[c]) * f[c];
            const double w = std::sqrt(n2);
            wsum += w;
            cx += w * bev.spec.center_x(ix);
            cy += w * bev.spec.center_y(iy);
        }
    REQUIRE(wsum > 0.0);
    CHECK(std::hypot(cx / wsum - 3.2, cy / wsum + 1.7) <= 0.5);
}

TEST_CASE("generate_bev is deterministic") {
    const CameraModel cam = nadir_camera(40.0, 32, 24);
    InstanceTrack box;
    box.id = 2;
    box.height = 2.5;
    box.poses = {Pose2{1.0, 2.0, 0.3}};
    const RenderedView view = render_view(cam, {box}, 0);
    const BevGrid a = generate_bev(view, cam, GbgMode::GroundPrior, HeightBins{}, 0.3,
                                   DepthBins{}, default_voxels(), Pose2{});
    const BevGrid b = generate_bev(view, cam, GbgMode::GroundPrior, HeightBins{}, 0.3,
                                   DepthBins{}, default_voxels(), Pose2{});
    CHECK(a.data == b.data);
}

TEST_SUITE_END();
