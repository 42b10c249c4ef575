#pragma once

#include <cmath>
#include <random>

#include "skyfleet/geometry.hpp"

namespace skyfleet::testutil {

inline Eigen::Matrix3d nadir_rotation() {
    // camera x -> world x, y down -> world -y, optical axis -> straight down
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
    return r;
}

inline Eigen::Matrix3d rot_x(double a) {
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return r;
}

inline Eigen::Matrix3d rot_z(double a) {
    Eigen::Matrix3d r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return r;
}

inline CameraModel nadir_camera(double altitude, int w = 64, int h = 48) {
    CameraModel cam;
    cam.width = w;
    cam.height = h;
    cam.altitude = altitude;
    cam.translation = Eigen::Vector3d(0.0, 0.0, altitude);
    cam.rotation = nadir_rotation();
    const double f = (w / 2.0) / std::tan(M_PI / 4.0);  // 90 deg hfov
    cam.intrinsics << f, 0, (w - 1) / 2.0, 0, f, (h - 1) / 2.0, 0, 0, 1;
    return cam;
}

// Downward-looking camera with a random tilt and yaw; all parameters drawn
// from the supplied generator so tests stay reproducible.
inline CameraModel random_camera(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> alt(20.0, 100.0);
    std::uniform_real_distribution<double> tilt(0.0, 1.0);  // rad off nadir
    std::uniform_real_distribution<double> yaw(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> pos(-30.0, 30.0);
    CameraModel cam = nadir_camera(alt(rng));
    cam.translation.x() = pos(rng);
    cam.translation.y() = pos(rng);
    cam.rotation = rot_z(yaw(rng)) * rot_x(tilt(rng)) * nadir_rotation();
    return cam;
}

inline double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace skyfleet::testutil
