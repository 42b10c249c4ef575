#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "skyfleet/errors.hpp"

namespace skyfleet {

// 2D BEV grid layout. Cells are half-open [lo, hi) squares; cell (0, 0)
// covers [x_min, x_min + resolution) x [y_min, y_min + resolution).
// Linear cell index is x * ny + y, and feature storage follows the same
// order with channels innermost (x, then y, then c).
struct GridSpec {
    double x_min = -50.0;
    double y_min = -50.0;
    double resolution = 0.5;  // meters per cell
    int nx = 200;
    int ny = 200;

    static GridSpec long_range() { return GridSpec{-50.0, -50.0, 0.5, 200, 200}; }
    static GridSpec short_range() { return GridSpec{-25.0, -25.0, 0.25, 200, 200}; }

    int cells() const { return nx * ny; }
    bool operator==(const GridSpec&) const = default;

    // Cell containing (x, y), or -1 when outside the extent.
    int cell_index(double x, double y) const {
        const int ix = static_cast<int>(std::floor((x - x_min) / resolution));
        const int iy = static_cast<int>(std::floor((y - y_min) / resolution));
        if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return -1;
        return ix * ny + iy;
    }
    double center_x(int ix) const { return x_min + (ix + 0.5) * resolution; }
    double center_y(int iy) const { return y_min + (iy + 0.5) * resolution; }
};

// Dense X x Y x C feature grid over a GridSpec.
struct BevGrid {
    GridSpec spec;
    int channels = 0;
    std::vector<float> data;  // spec.nx * spec.ny * channels

    BevGrid() = default;
    BevGrid(const GridSpec& s, int c) : spec(s), channels(c) {
        data.assign(static_cast<size_t>(s.cells()) * c, 0.0f);
    }
    float* at(int ix, int iy) {
        return data.data() + (static_cast<size_t>(ix) * spec.ny + iy) * channels;
    }
    const float* at(int ix, int iy) const {
        return data.data() + (static_cast<size_t>(ix) * spec.ny + iy) * channels;
    }
    float* cell(int linear) { return data.data() + static_cast<size_t>(linear) * channels; }
    const float* cell(int linear) const {
        return data.data() + static_cast<size_t>(linear) * channels;
    }
};

// Single-channel X x Y grid (compressed features, info volume, scores,
// fusion weights).
struct ScalarGrid {
    int nx = 0;
    int ny = 0;
    std::vector<float> v;

    ScalarGrid() = default;
    ScalarGrid(int x, int y, float fill = 0.0f) : nx(x), ny(y) {
        v.assign(static_cast<size_t>(x) * y, fill);
    }
    float& at(int ix, int iy) { return v[static_cast<size_t>(ix) * ny + iy]; }
    float at(int ix, int iy) const { return v[static_cast<size_t>(ix) * ny + iy]; }
    int cells() const { return nx * ny; }
};

struct BinaryMask {
    int nx = 0;
    int ny = 0;
    std::vector<uint8_t> v;

    BinaryMask() = default;
    BinaryMask(int x, int y) : nx(x), ny(y) { v.assign(static_cast<size_t>(x) * y, 0); }
    uint8_t& at(int ix, int iy) { return v[static_cast<size_t>(ix) * ny + iy]; }
    uint8_t at(int ix, int iy) const { return v[static_cast<size_t>(ix) * ny + iy]; }
};

struct IdMask {
    int nx = 0;
    int ny = 0;
    std::vector<int32_t> v;

    IdMask() = default;
    IdMask(int x, int y) : nx(x), ny(y) { v.assign(static_cast<size_t>(x) * y, 0); }
    int32_t& at(int ix, int iy) { return v[static_cast<size_t>(ix) * ny + iy]; }
    int32_t at(int ix, int iy) const { return v[static_cast<size_t>(ix) * ny + iy]; }
};

// Per-cell 2-vector (flow in meters per frame).
struct FlowGrid {
    int nx = 0;
    int ny = 0;
    std::vector<float> v;  // 2 per cell

    FlowGrid() = default;
    FlowGrid(int x, int y) : nx(x), ny(y) { v.assign(static_cast<size_t>(x) * y * 2, 0.0f); }
    float* at(int ix, int iy) { return v.data() + (static_cast<size_t>(ix) * ny + iy) * 2; }
    const float* at(int ix, int iy) const {
        return v.data() + (static_cast<size_t>(ix) * ny + iy) * 2;
    }
};

// Voxel grid: BEV layout plus a z column. Storage order x, y, z, c.
struct VoxelSpec {
    GridSpec plan;
    double z_min = 0.0;
    double z_res = 1.0;
    int nz = 10;
};

struct VoxelGrid {
    VoxelSpec spec;
    int channels = 0;
    std::vector<float> data;

    VoxelGrid() = default;
    VoxelGrid(const VoxelSpec& s, int c) : spec(s), channels(c) {
        data.assign(static_cast<size_t>(s.plan.cells()) * s.nz * c, 0.0f);
    }
    float* at(int ix, int iy, int iz) {
        return data.data() +
               ((static_cast<size_t>(ix) * spec.plan.ny + iy) * spec.nz + iz) * channels;
    }
    const float* at(int ix, int iy, int iz) const {
        return data.data() +
               ((static_cast<size_t>(ix) * spec.plan.ny + iy) * spec.nz + iz) * channels;
    }
};

// 2D rigid transform of a drone's BEV frame within the world frame.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;  // radians

    bool operator==(const Pose2&) const = default;
};

inline void frame_to_world(const Pose2& pose, double fx, double fy, double& wx, double& wy) {
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    wx = pose.x + c * fx - s * fy;
    wy = pose.y + s * fx + c * fy;
}

inline void world_to_frame(const Pose2& pose, double wx, double wy, double& fx, double& fy) {
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    const double dx = wx - pose.x, dy = wy - pose.y;
    fx = c * dx + s * dy;
    fy = -s * dx + c * dy;
}

}  // namespace skyfleet
