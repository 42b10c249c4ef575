#include "skyfleet/bev.hpp"

#include <algorithm>
#include <cmath>

#include "skyfleet/errors.hpp"

namespace skyfleet {

FrustumCandidates lift(const RenderedView& view, const HeightDistribution& heights,
                       const CameraModel& cam) {
    if (heights.width != view.width || heights.height != view.height)
        throw ConfigError("height distribution shape does not match the view");
    if (!(cam.altitude > 0.0)) throw ConfigError("camera altitude must be positive");

    FrustumCandidates out;
    out.view = &view;
    out.channels = view.channels;
    const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
    const int bins = heights.bins;

    size_t upper = 0;
    for (size_t i = 0; i < heights.p.size(); ++i) upper += heights.p[i] > 0.0f;
    out.items.reserve(upper);

    for (int v = 0; v < view.height; ++v) {
        for (int u = 0; u < view.width; ++u) {
            const size_t i = view.idx(u, v);
            if (!view.validity[i]) continue;
            const Eigen::Vector3d dir =
                (cam.rotation * (k_inv * Eigen::Vector3d(u, v, 1.0))).normalized();
            if (dir.z() >= 0.0) continue;
            const double d_ub = -cam.translation.z() / dir.z();
            if (d_ub <= 0.0) continue;
            const float* p = heights.at(u, v);
            for (int b = 0; b < bins; ++b) {
                const float w = p[b];
                if (w <= 0.0f) continue;
                const double h_b = heights.bin_center(b);
                if (h_b >= cam.altitude) continue;  // nonpositive depth, geometrically void
                const double d = d_ub * (1.0 - h_b / cam.altitude);
                const Eigen::Vector3d pt = cam.translation + d * dir;
                out.items.push_back({pt.cast<float>(), w, static_cast<int32_t>(i)});
            }
        }
    }
    return out;
}

FrustumCandidates lift_flat_ground(const RenderedView& view, const CameraModel& cam) {
    FrustumCandidates out;
    out.view = &view;
    out.channels = view.channels;
    const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
    out.items.reserve(static_cast<size_t>(view.width) * view.height);
    for (int v = 0; v < view.height; ++v) {
        for (int u = 0; u < view.width; ++u) {
            const size_t i = view.idx(u, v);
            if (!view.validity[i]) continue;
            const Eigen::Vector3d dir =
                (cam.rotation * (k_inv * Eigen::Vector3d(u, v, 1.0))).normalized();
            if (dir.z() >= 0.0) continue;
            const double d_ub = -cam.translation.z() / dir.z();
            if (d_ub <= 0.0) continue;
            const Eigen::Vector3d pt = cam.translation + d_ub * dir;
            out.items.push_back({pt.cast<float>(), 1.0f, static_cast<int32_t>(i)});
        }
    }
    return out;
}

FrustumCandidates lift_depth_bins(const RenderedView& view, const CameraModel& cam,
                                  const DepthBins& bins, bool uniform) {
    if (bins.count < 1 || !(bins.hi > bins.lo)) throw ConfigError("bad depth-bin spec");
    FrustumCandidates out;
    out.view = &view;
    out.channels = view.channels;
    const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
    const float uw = static_cast<float>(1.0 / bins.count);
    out.items.reserve(static_cast<size_t>(view.width) * view.height *
                      (uniform ? static_cast<size_t>(bins.count) : 1));
    for (int v = 0; v < view.height; ++v) {
        for (int u = 0; u < view.width; ++u) {
            const size_t i = view.idx(u, v);
            if (!view.validity[i]) continue;
            const Eigen::Vector3d dir =
                (cam.rotation * (k_inv * Eigen::Vector3d(u, v, 1.0))).normalized();
            if (uniform) {
                for (int b = 0; b < bins.count; ++b) {
                    const Eigen::Vector3d pt = cam.translation + bins.center(b) * dir;
                    out.items.push_back({pt.cast<float>(), uw, static_cast<int32_t>(i)});
                }
            } else {
                int b = static_cast<int>(
                    std::floor((view.hit_distance[i] - bins.lo) / bins.width()));
                b = std::clamp(b, 0, bins.count - 1);
                const Eigen::Vector3d pt = cam.translation + bins.center(b) * dir;
                out.items.push_back({pt.cast<float>(), 1.0f, static_cast<int32_t>(i)});
            }
        }
    }
    return out;
}

VoxelGrid splat(const FrustumCandidates& candidates, const VoxelSpec& spec,
                const Pose2& frame_pose, int64_t* dropped) {
    if (spec.nz < 1 || !(spec.z_res > 0.0)) throw ConfigError("bad voxel z spec");
    VoxelGrid grid(spec, candidates.channels);
    int64_t out_of_extent = 0;
    const GridSpec& plan = spec.plan;
    const double c = std::cos(frame_pose.yaw), s = std::sin(frame_pose.yaw);
    const bool identity = frame_pose == Pose2{};

    for (const auto& cand : candidates.items) {
        double fx = cand.point.x(), fy = cand.point.y();
        if (!identity) {
            const double dx = fx - frame_pose.x, dy = fy - frame_pose.y;
            fx = c * dx + s * dy;
            fy = -s * dx + c * dy;
        }
        const int ix = static_cast<int>(std::floor((fx - plan.x_min) / plan.resolution));
        const int iy = static_cast<int>(std::floor((fy - plan.y_min) / plan.resolution));
        double zf = (cand.point.z() - spec.z_min) / spec.z_res;
        // Ground-level candidates land numerically at z = 0 minus rounding.
        if (zf < 0.0 && zf > -1e-6) zf = 0.0;
        const int iz = static_cast<int>(std::floor(zf));
        if (ix < 0 || ix >= plan.nx || iy < 0 || iy >= plan.ny || iz < 0 || iz >= spec.nz) {
            ++out_of_extent;
            continue;
        }
        float* cell = grid.at(ix, iy, iz);
        const float* feat = candidates.view->feature.data() +
                            static_cast<size_t>(cand.pixel) * candidates.channels;
        for (int ch = 0; ch < candidates.channels; ++ch) cell[ch] += cand.weight * feat[ch];
    }
    if (dropped) *dropped = out_of_extent;
    return grid;
}

BevGrid sum_pool_z(const VoxelGrid& voxels) {
    BevGrid bev(voxels.spec.plan, voxels.channels);
    for (int ix = 0; ix < voxels.spec.plan.nx; ++ix) {
        for (int iy = 0; iy < voxels.spec.plan.ny; ++iy) {
            float* out = bev.at(ix, iy);
            for (int iz = 0; iz < voxels.spec.nz; ++iz) {
                const float* in = voxels.at(ix, iy, iz);
                for (int ch = 0; ch < voxels.channels; ++ch) out[ch] += in[ch];
            }
        }
    }
    return bev;
}

BevGrid generate_bev(const RenderedView& view, const CameraModel& cam, GbgMode mode,
                     const HeightBins& height_bins, double height_noise_sigma,
                     const DepthBins& depth_bins, const VoxelSpec& voxel_spec,
                     const Pose2& frame_pose, int64_t* dropped) {
    FrustumCandidates cands;
    switch (mode) {
        case GbgMode::GroundPrior: {
            HeightDistribution heights =
                oracle_height_estimator(view, height_noise_sigma, height_bins);
            cands = lift(view, heights, cam);
            break;
        }
        case GbgMode::FlatGround:
            cands = lift_flat_ground(view, cam);
            break;
        case GbgMode::DepthBinOracle:
            cands = lift_depth_bins(view, cam, depth_bins, false);
            break;
        case GbgMode::DepthBinUniform:
            cands = lift_depth_bins(view, cam, depth_bins, true);
            break;
    }
    return sum_pool_z(splat(cands, voxel_spec, frame_pose, dropped));
}

}  // namespace skyfleet
