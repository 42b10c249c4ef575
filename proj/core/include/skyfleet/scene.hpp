#pragma once

#include <cstdint>
#include <vector>

#include "skyfleet/geometry.hpp"
#include "skyfleet/grid.hpp"

namespace skyfleet {

inline constexpr int kVehicleClass = 1;
inline constexpr int kOccluderClass = 2;  // static view blockers, not prediction targets
inline constexpr int kFeatureChannels = 16;

// One box-shaped moving object. `poses` holds the footprint center and yaw
// for every frame of the scene horizon (t1 + t2 frames).
struct InstanceTrack {
    int id = 0;  // positive, unique per scene
    int cls = kVehicleClass;
    double length = 4.5;  // meters, along yaw
    double width = 2.0;
    double height = 1.8;  // flat prism top, in (0, 10]
    std::vector<Pose2> poses;
};

struct SceneParams {
    int instance_count = 8;
    int occluder_count = 0;  // oversized static boxes for occlusion studies
    double area_half_extent = 30.0;
    double speed_min = 2.0;  // m/s
    double speed_max = 4.0;  // keeps per-frame displacement inside the tracking gate
    double height_min = 1.4;
    double height_max = 4.0;
    double length_min = 3.8;
    double length_max = 5.5;
    double width_min = 1.8;
    double width_max = 2.2;
    double turn_probability = 0.3;
    double yaw_rate_max = 0.3;  // rad/s
    double occluder_size = 8.0;
    double occluder_height_min = 5.0;
    double occluder_height_max = 9.0;
    int frames = 7;  // t1 + t2
    double dt = 0.5;  // seconds, 2 Hz capture
    int placement_retries = 1000;
};

struct DroneRigParams {
    int drones = 4;
    double altitude = 50.0;
    double spacing = 40.0;  // corner distance from area center along each axis
    int image_width = 256;
    int image_height = 192;
    double hfov_deg = 90.0;
};

struct Scene {
    std::vector<InstanceTrack> tracks;
    std::vector<CameraModel> cameras;
    std::vector<Pose2> bev_poses;  // each drone's BEV frame in the world
};

// Deterministic scene synthesis. Frame-0 footprints are pairwise disjoint;
// throws DomainError naming the seed when placement cannot be satisfied.
Scene generate_scene(uint64_t seed, const SceneParams& params, const DroneRigParams& rig);

// Per-pixel first-hit render of the box scene over the ground plane.
// Sky pixels are invalid. hit_distance is the metric distance along the
// pixel ray to the first surface (ground included).
struct RenderedView {
    int width = 0;
    int height = 0;
    int channels = kFeatureChannels;
    std::vector<int32_t> class_map;   // 0 = ground
    std::vector<int32_t> instance_map;  // 0 = none
    std::vector<float> true_height;   // z of the observed surface point, 0 for ground
    std::vector<float> hit_distance;  // meters
    std::vector<uint8_t> validity;
    std::vector<float> feature;  // width * height * channels

    size_t idx(int u, int v) const { return static_cast<size_t>(v) * width + u; }
    const float* feat(int u, int v) const { return feature.data() + idx(u, v) * channels; }
};

RenderedView render_view(const CameraModel& cam, const std::vector<InstanceTrack>& tracks,
                         int frame);

// Deterministic per-(class, instance) feature vector of kFeatureChannels.
// Ground (cls 0) maps to the zero vector; instances carry a bias channel,
// a class one-hot and a pseudo-random unit vector keyed by id.
void instance_embedding(int cls, int id, float* out);
double instance_embedding_norm();

struct HeightBins {
    double lo = 0.0;
    double hi = 10.0;
    int count = 100;

    double width() const { return (hi - lo) / count; }
    double center(int b) const { return lo + (b + 0.5) * width(); }
    int clamped_bin(double h, bool* clamped = nullptr) const {
        int b = static_cast<int>(std::floor((h - lo) / width()));
        if (clamped) *clamped = (b < 0 || b >= count);
        if (b < 0) b = 0;
        if (b >= count) b = count - 1;
        return b;
    }
    bool operator==(const HeightBins&) const = default;
};

// Per-pixel categorical height distribution. Invalid pixels hold all zeros.
struct HeightDistribution {
    int width = 0;
    int height = 0;
    int bins = 0;
    double bin_lo = 0.0;
    double bin_width = 0.1;
    std::vector<float> p;  // width * height * bins
    int clamp_warnings = 0;

    double bin_center(int b) const { return bin_lo + (b + 0.5) * bin_width; }

    const float* at(int u, int v) const {
        return p.data() + (static_cast<size_t>(v) * width + u) * bins;
    }
    float* at(int u, int v) { return p.data() + (static_cast<size_t>(v) * width + u) * bins; }
};

// Stand-in height estimator. sigma = 0 gives a one-hot at the true bin;
// sigma > 0 spreads a renormalized discretized Gaussian around true_height.
HeightDistribution oracle_height_estimator(const RenderedView& view, double noise_sigma,
                                           const HeightBins& bins);

struct GroundTruthBev {
    GridSpec spec;
    std::vector<uint8_t> occupancy;
    std::vector<int32_t> instance_ids;
    std::vector<float> flow;  // 2 per cell, meters per frame, frame-local axes

    size_t cell(int ix, int iy) const { return static_cast<size_t>(ix) * spec.ny + iy; }
};

// Rasterizes footprints onto a BEV grid expressed in `frame_pose`.
// A cell is occupied iff its center lies inside a footprint; overlaps
// resolve to the nearest footprint center, then the lower id.
GroundTruthBev rasterize_gt_bev(const std::vector<InstanceTrack>& tracks, int frame,
                                const GridSpec& grid, const Pose2& frame_pose = {});

// Oriented-rectangle overlap (separating axis test); shared by generation
// and its tests.
bool footprints_overlap(const Pose2& a, double la, double wa, const Pose2& b, double lb,
                        double wb);

}  // namespace skyfleet
