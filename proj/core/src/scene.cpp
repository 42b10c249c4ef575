#include "skyfleet/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skyfleet/errors.hpp"
#include "skyfleet/rng.hpp"

namespace skyfleet {

namespace {

void rect_corners(const Pose2& p, double length, double width, double cx[4], double cy[4]) {
    const double c = std::cos(p.yaw), s = std::sin(p.yaw);
    const double hl = length / 2.0, hw = width / 2.0;
    const double lx[4] = {hl, hl, -hl, -hl};
    const double ly[4] = {hw, -hw, -hw, hw};
    for (int i = 0; i < 4; ++i) {
        cx[i] = p.x + c * lx[i] - s * ly[i];
        cy[i] = p.y + s * lx[i] + c * ly[i];
    }
}

bool separated_on_axes(const Pose2& a, double la, double wa, const double bx[4],
                       const double by[4]) {
    const double c = std::cos(a.yaw), s = std::sin(a.yaw);
    const double axes[2][2] = {{c, s}, {-s, c}};
    const double half[2] = {la / 2.0, wa / 2.0};
    for (int k = 0; k < 2; ++k) {
        double lo = std::numeric_limits<double>::max();
        double hi = std::numeric_limits<double>::lowest();
        for (int i = 0; i < 4; ++i) {
            const double proj = axes[k][0] * (bx[i] - a.x) + axes[k][1] * (by[i] - a.y);
            lo = std::min(lo, proj);
            hi = std::max(hi, proj);
        }
        if (lo > half[k] || hi < -half[k]) return true;
    }
    return false;
}

}  // namespace

bool footprints_overlap(const Pose2& a, double la, double wa, const Pose2& b, double lb,
                        double wb) {
    double bx[4], by[4], ax[4], ay[4];
    rect_corners(b, lb, wb, bx, by);
    if (separated_on_axes(a, la, wa, bx, by)) return false;
    rect_corners(a, la, wa, ax, ay);
    if (separated_on_axes(b, lb, wb, ax, ay)) return false;
    return true;
}

namespace {

CameraModel make_drone_camera(double px, double py, double altitude, int width, int height,
                              double hfov_deg) {
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.altitude = altitude;
    cam.translation = Eigen::Vector3d(px, py, altitude);
    const double f = (width / 2.0) / std::tan(hfov_deg * M_PI / 180.0 / 2.0);
    cam.intrinsics << f, 0, width / 2.0, 0, f, height / 2.0, 0, 0, 1;
    // Optical axis toward the area center at ground level; image up toward sky.
    Eigen::Vector3d forward = (Eigen::Vector3d(0, 0, 0) - cam.translation).normalized();
    Eigen::Vector3d right = forward.cross(Eigen::Vector3d(0, 0, 1)).normalized();
    Eigen::Vector3d down = forward.cross(right);
    cam.rotation.col(0) = right;
    cam.rotation.col(1) = down;
    cam.rotation.col(2) = forward;
    cam.validate();
    return cam;
}

}  // namespace

Scene generate_scene(uint64_t seed, const SceneParams& params, const DroneRigParams& rig) {
    if (params.instance_count < 0 || params.occluder_count < 0)
        throw ConfigError("instance counts must be non-negative");
    if (!(params.area_half_extent > 0.0)) throw ConfigError("scene area must be positive");
    if (rig.drones < 1) throw ConfigError("drone rig needs at least one drone");

    Scene scene;
    Rng rng(splitmix64(seed));

    const int total = params.instance_count + params.occluder_count;
    for (int i = 0; i < total; ++i) {
        const bool occluder = i >= params.instance_count;
        InstanceTrack track;
        track.id = i + 1;
        if (occluder) {
            track.cls = kOccluderClass;
            track.length = params.occluder_size;
            track.width = params.occluder_size;
            track.height = rng.uniform(params.occluder_height_min, params.occluder_height_max);
        } else {
            track.length = rng.uniform(params.length_min, params.length_max);
            track.width = rng.uniform(params.width_min, params.width_max);
            track.height = rng.uniform(params.height_min, params.height_max);
        }
        const double speed = occluder ? 0.0 : rng.uniform(params.speed_min, params.speed_max);
        double yaw_rate = 0.0;
        const double turn_draw = rng.uniform();
        const double yaw_rate_draw = rng.uniform(-params.yaw_rate_max, params.yaw_rate_max);
        if (!occluder && turn_draw < params.turn_probability) yaw_rate = yaw_rate_draw;

        Pose2 start;
        bool placed = false;
        for (int attempt = 0; attempt < params.placement_retries; ++attempt) {
            start.x = rng.uniform(-params.area_half_extent, params.area_half_extent);
            start.y = rng.uniform(-params.area_half_extent, params.area_half_extent);
            start.yaw = rng.uniform(0.0, 2.0 * M_PI);
            bool clash = false;
            for (const auto& other : scene.tracks) {
                if (footprints_overlap(start, track.length, track.width, other.poses[0],
                                       other.length, other.width)) {
                    clash = true;
                    break;
                }
            }
            if (!clash) {
                placed = true;
                break;
            }
        }
        if (!placed)
            throw DomainError("scene generation failed: no disjoint placement for seed " +
                              std::to_string(seed));

        track.poses.reserve(params.frames);
        Pose2 pose = start;
        for (int f = 0; f < params.frames; ++f) {
            track.poses.push_back(pose);
            pose.x += speed * std::cos(pose.yaw) * params.dt;
            pose.y += speed * std::sin(pose.yaw) * params.dt;
            pose.yaw += yaw_rate * params.dt;
        }
        scene.tracks.push_back(std::move(track));
    }

    // Drones on the corners of a square around the area, all facing the center.
    for (int d = 0; d < rig.drones; ++d) {
        const double angle = M_PI / 4.0 + d * 2.0 * M_PI / rig.drones;
        const double r = rig.spacing * std::sqrt(2.0);
        const double px = r * std::cos(angle);
        const double py = r * std::sin(angle);
        scene.cameras.push_back(make_drone_camera(px, py, rig.altitude, rig.image_width,
                                                  rig.image_height, rig.hfov_deg));
        // BEV frame sits on the observed area (the optical-axis ground
        // point), x axis along the viewing direction. Frames of different
        // drones therefore share their footprint but differ by rotation.
        scene.bev_poses.push_back(Pose2{0.0, 0.0, std::atan2(-py, -px)});
    }
    return scene;
}

namespace {

// Ray vs. upright box: footprint rectangle extruded over [0, height].
// Returns the entry distance, or a negative value on miss.
double ray_box_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                   const Pose2& pose, double length, double width, double height) {
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    // Into the box frame (rotate by -yaw around the footprint center).
    const double ox = origin.x() - pose.x, oy = origin.y() - pose.y;
    const double lox = c * ox + s * oy;
    const double loy = -s * ox + c * oy;
    const double loz = origin.z();
    const double ldx = c * dir.x() + s * dir.y();
    const double ldy = -s * dir.x() + c * dir.y();
    const double ldz = dir.z();

    const double lo[3] = {-length / 2.0, -width / 2.0, 0.0};
    const double hi[3] = {length / 2.0, width / 2.0, height};
    const double o[3] = {lox, loy, loz};
    const double d[3] = {ldx, ldy, ldz};

    double t_near = 0.0;
    double t_far = std::numeric_limits<double>::max();
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
            if (o[i] < lo[i] || o[i] > hi[i]) return -1.0;
            continue;
        }
        double t0 = (lo[i] - o[i]) / d[i];
        double t1 = (hi[i] - o[i]) / d[i];
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return -1.0;
    }
    if (t_near <= 0.0) return -1.0;  // camera inside or box behind
    return t_near;
}

}  // namespace

void instance_embedding(int cls, int id, float* out) {
    std::fill(out, out + kFeatureChannels, 0.0f);
    if (cls == 0) return;  // ground carries no feature mass
    out[0] = 1.0f;  // bias
    const int class_slot = 1 + ((cls - 1) % 7);
    out[class_slot] = 1.0f;
    // Pseudo-random unit vector over channels 8..15, keyed by id.
    uint64_t key = splitmix64(0x5eedf00du + static_cast<uint64_t>(id));
    double norm2 = 0.0;
    double raw[8];
    for (int i = 0; i < 8; ++i) {
        key = splitmix64(key);
        raw[i] = (static_cast<double>(key >> 11) * 0x1.0p-53) * 2.0 - 1.0;
        norm2 += raw[i] * raw[i];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < 8; ++i) out[8 + i] = static_cast<float>(raw[i] * inv);
}

double instance_embedding_norm() { return std::sqrt(3.0); }

RenderedView render_view(const CameraModel& cam, const std::vector<InstanceTrack>& tracks,
                         int frame) {
    cam.validate();
    for (const auto& t : tracks)
        if (frame < 0 || frame >= static_cast<int>(t.poses.size()))
            throw DomainError("render frame outside scene horizon");

    RenderedView view;
    view.width = cam.width;
    view.height = cam.height;
    const size_t n = static_cast<size_t>(cam.width) * cam.height;
    view.class_map.assign(n, 0);
    view.instance_map.assign(n, 0);
    view.true_height.assign(n, 0.0f);
    view.hit_distance.assign(n, 0.0f);
    view.validity.assign(n, 0);
    view.feature.assign(n * kFeatureChannels, 0.0f);

    const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const Eigen::Vector3d dir =
                (cam.rotation * (k_inv * Eigen::Vector3d(u, v, 1.0))).normalized();
            double best_t = std::numeric_limits<double>::max();
            const InstanceTrack* best = nullptr;
            for (const auto& t : tracks) {
                const double hit = ray_box_hit(cam.translation, dir, t.poses[frame], t.length,
                                               t.width, t.height);
                if (hit > 0.0 && hit < best_t) {
                    best_t = hit;
                    best = &t;
                }
            }
            double ground_t = -1.0;
            if (dir.z() < 0.0) ground_t = -cam.translation.z() / dir.z();

            const size_t i = view.idx(u, v);
            if (best && (ground_t <= 0.0 || best_t < ground_t)) {
                view.class_map[i] = best->cls;
                view.instance_map[i] = best->id;
                // Height of the observed surface point, not the box top:
                // reprojecting through this z lands exactly on the hit.
                view.true_height[i] =
                    static_cast<float>(cam.translation.z() + best_t * dir.z());
                view.hit_distance[i] = static_cast<float>(best_t);
                view.validity[i] = 1;
                instance_embedding(best->cls, best->id,
                                   view.feature.data() + i * kFeatureChannels);
            } else if (ground_t > 0.0) {
                view.hit_distance[i] = static_cast<float>(ground_t);
                view.validity[i] = 1;
            }
            // else: sky pixel, stays invalid
        }
    }
    return view;
}

HeightDistribution oracle_height_estimator(const RenderedView& view, double noise_sigma,
                                           const HeightBins& bins) {
    if (bins.count < 1 || !(bins.hi > bins.lo)) throw ConfigError("bad height-bin spec");
    HeightDistribution dist;
    dist.width = view.width;
    dist.height = view.height;
    dist.bins = bins.count;
    dist.bin_lo = bins.lo;
    dist.bin_width = bins.width();
    dist.p.assign(static_cast<size_t>(view.width) * view.height * bins.count, 0.0f);

    const size_t n = static_cast<size_t>(view.width) * view.height;
    for (size_t i = 0; i < n; ++i) {
        if (!view.validity[i]) continue;
        float* p = dist.p.data() + i * bins.count;
        const double h = view.true_height[i];
        bool clamped = false;
        if (noise_sigma <= 0.0) {
            p[bins.clamped_bin(h, &clamped)] = 1.0f;
        } else {
            // Discretized Gaussian, truncated at 5 sigma and renormalized.
            const int center = bins.clamped_bin(h, &clamped);
            const int reach = static_cast<int>(std::ceil(5.0 * noise_sigma / bins.width())) + 1;
            const int b0 = std::max(0, center - reach);
            const int b1 = std::min(bins.count - 1, center + reach);
            double sum = 0.0;
            for (int b = b0; b <= b1; ++b) {
                const double z = (bins.center(b) - h) / noise_sigma;
                const double w = std::exp(-0.5 * z * z);
                p[b] = static_cast<float>(w);
                sum += w;
            }
            const float inv = static_cast<float>(1.0 / sum);
            for (int b = b0; b <= b1; ++b) p[b] *= inv;
        }
        if (clamped) ++dist.clamp_warnings;
    }
    return dist;
}

GroundTruthBev rasterize_gt_bev(const std::vector<InstanceTrack>& tracks, int frame,
                                const GridSpec& grid, const Pose2& frame_pose) {
    GroundTruthBev gt;
    gt.spec = grid;
    const size_t n = static_cast<size_t>(grid.cells());
    gt.occupancy.assign(n, 0);
    gt.instance_ids.assign(n, 0);
    gt.flow.assign(n * 2, 0.0f);
    std::vector<float> best_d2(n, std::numeric_limits<float>::max());

    for (const auto& t : tracks) {
        if (frame >= static_cast<int>(t.poses.size())) throw DomainError("frame out of range");
        if (t.cls != kVehicleClass) continue;  // occluders are scenery, not targets
        const Pose2& p = t.poses[frame];
        // Footprint corners in the grid frame bound the cells to visit.
        double cx[4], cy[4];
        rect_corners(p, t.length, t.width, cx, cy);
        double fx_min = 1e30, fx_max = -1e30, fy_min = 1e30, fy_max = -1e30;
        for (int i = 0; i < 4; ++i) {
            double fx, fy;
            world_to_frame(frame_pose, cx[i], cy[i], fx, fy);
            fx_min = std::min(fx_min, fx);
            fx_max = std::max(fx_max, fx);
            fy_min = std::min(fy_min, fy);
            fy_max = std::max(fy_max, fy);
        }
        int ix0 = std::max(0, static_cast<int>(std::floor((fx_min - grid.x_min) / grid.resolution)));
        int ix1 = std::min(grid.nx - 1,
                           static_cast<int>(std::floor((fx_max - grid.x_min) / grid.resolution)));
        int iy0 = std::max(0, static_cast<int>(std::floor((fy_min - grid.y_min) / grid.resolution)));
        int iy1 = std::min(grid.ny - 1,
                           static_cast<int>(std::floor((fy_max - grid.y_min) / grid.resolution)));

        const double c = std::cos(p.yaw), s = std::sin(p.yaw);
        double dx_world = 0.0, dy_world = 0.0;
        if (frame + 1 < static_cast<int>(t.poses.size())) {
            dx_world = t.poses[frame + 1].x - p.x;
            dy_world = t.poses[frame + 1].y - p.y;
        }
        const double cf = std::cos(frame_pose.yaw), sf = std::sin(frame_pose.yaw);
        const float flow_x = static_cast<float>(cf * dx_world + sf * dy_world);
        const float flow_y = static_cast<float>(-sf * dx_world + cf * dy_world);

        for (int ix = ix0; ix <= ix1; ++ix) {
            for (int iy = iy0; iy <= iy1; ++iy) {
                double wx, wy;
                frame_to_world(frame_pose, grid.center_x(ix), grid.center_y(iy), wx, wy);
                const double rx = wx - p.x, ry = wy - p.y;
                const double lx = c * rx + s * ry;
                const double ly = -s * rx + c * ry;
                if (std::abs(lx) > t.length / 2.0 || std::abs(ly) > t.width / 2.0) continue;
                const size_t cell = gt.cell(ix, iy);
                const float d2 = static_cast<float>(rx * rx + ry * ry);
                const bool wins = !gt.occupancy[cell] || d2 < best_d2[cell] ||
                                  (d2 == best_d2[cell] && t.id < gt.instance_ids[cell]);
                if (!wins) continue;
                gt.occupancy[cell] = 1;
                gt.instance_ids[cell] = t.id;
                best_d2[cell] = d2;
                gt.flow[cell * 2] = flow_x;
                gt.flow[cell * 2 + 1] = flow_y;
            }
        }
    }
    return gt;
}

}  // namespace skyfleet
