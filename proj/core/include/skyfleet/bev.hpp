#pragma once

#include <cstdint>
#include <vector>

#include "skyfleet/geometry.hpp"
#include "skyfleet/grid.hpp"
#include "skyfleet/scene.hpp"

namespace skyfleet {

enum class GbgMode {
    GroundPrior,     // height-conditioned depth along each ray
    FlatGround,      // ground prior with all heights forced to zero
    DepthBinOracle,  // depth-bin candidates, one-hot at the true hit distance
    DepthBinUniform  // depth-bin candidates, uniform distribution
};

struct DepthBins {
    double lo = 1.0;
    double hi = 100.0;
    int count = 100;

    double width() const { return (hi - lo) / count; }
    double center(int b) const { return lo + (b + 0.5) * width(); }
    bool operator==(const DepthBins&) const = default;
};

// World-space feature candidates for one view, ordered pixel row-major then
// bin index. Zero-weight bins are omitted (they contribute nothing to the
// splat sum).
struct FrustumCandidates {
    struct Candidate {
        Eigen::Vector3f point;  // world, meters
        float weight;
        int32_t pixel;  // u + v*width into the source view
    };
    std::vector<Candidate> items;
    const RenderedView* view = nullptr;
    int channels = 0;
};

// Height-bin lift: candidate depth from the per-pixel ground prior and the
// bin-center height; bins at or above the camera altitude are skipped.
FrustumCandidates lift(const RenderedView& view, const HeightDistribution& heights,
                       const CameraModel& cam);

// Depth-bin lift for the vanilla baseline. Oracle mode is one-hot at the bin
// nearest the true hit distance; Uniform spreads 1/count over all bins.
FrustumCandidates lift_depth_bins(const RenderedView& view, const CameraModel& cam,
                                  const DepthBins& bins, bool uniform);

// Flat-ground variant: every valid pixel lands at its ground intersection.
FrustumCandidates lift_flat_ground(const RenderedView& view, const CameraModel& cam);

// Accumulates weight * feature into the voxel containing each candidate,
// in candidate order. Grid coordinates are the given frame's. Out-of-extent
// candidates are dropped and counted.
VoxelGrid splat(const FrustumCandidates& candidates, const VoxelSpec& spec,
                const Pose2& frame_pose = {}, int64_t* dropped = nullptr);

// Exact sum over z.
BevGrid sum_pool_z(const VoxelGrid& voxels);

// lift -> splat -> pool for the requested mode.
BevGrid generate_bev(const RenderedView& view, const CameraModel& cam, GbgMode mode,
                     const HeightBins& height_bins, double height_noise_sigma,
                     const DepthBins& depth_bins, const VoxelSpec& voxel_spec,
                     const Pose2& frame_pose, int64_t* dropped = nullptr);

}  // namespace skyfleet
