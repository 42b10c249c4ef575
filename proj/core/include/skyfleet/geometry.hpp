#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace skyfleet {

struct Ray {
    Eigen::Vector3d origin;
    Eigen::Vector3d direction;  // unit length
};

// Pinhole camera. World frame is z-up with ground plane z = 0; the camera
// origin sits at z = +altitude. `rotation` maps camera axes (x right,
// y down, z optical axis) into world axes.
struct CameraModel {
    Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // camera origin in world, meters
    int width = 0;
    int height = 0;
    double altitude = 0.0;  // meters above the ground plane, > 0

    // Throws ConfigError on non-orthonormal rotation, bad intrinsics,
    // or altitude inconsistent with translation.z().
    void validate() const;
};

// Per-pixel ground-prior maps. Pixels whose ray never reaches the ground
// plane in front of the camera are invalid; their map entries are NaN.
struct GroundPriorMaps {
    int width = 0;
    int height = 0;
    std::vector<double> depth_upper_bound;  // meters, index u + v*width
    std::vector<double> viewing_angle;      // radians
    std::vector<uint8_t> valid;

    size_t idx(int u, int v) const { return static_cast<size_t>(v) * width + u; }
};

// Ray through pixel (u, v): origin at the camera position, direction
// normalize(R * K^-1 * (u, v, 1)). Throws ConfigError for singular K.
Ray pixel_ray(const CameraModel& cam, double u, double v);

// Distance along the pixel ray to its intersection with z = 0, or nullopt
// when the ray points at or above the horizon (no ground intersection in
// front of the camera). Throws ConfigError when altitude <= 0.
std::optional<double> depth_upper_bound(const CameraModel& cam, double u, double v);

// arcsin(altitude / depth_upper_bound), in (0, pi/2]. nullopt when the
// depth upper bound is undefined for this pixel.
std::optional<double> viewing_angle(const CameraModel& cam, double u, double v);

// Height-conditioned depth: d_upper * (1 - h / altitude). Throws DomainError
// unless 0 <= h <= altitude.
double depth_from_height(double d_upper, double altitude, double h);

// Ratio of the drone-anchored depth range to the ground-anchored one for a
// camera at altitude k * h_max. Returns +infinity when theta_lower_bound is
// pi/2 (denominator vanishes). Throws DomainError on bad angles or k < 1.
double range_ratio(double altitude_multiple_k, double theta_pixel, double theta_lower_bound);

// First-order depth variation h * cos(theta) / sin^2(theta) * delta for a
// viewing-angle perturbation delta. Throws DomainError on invalid inputs.
double depth_sensitivity(double h, double theta, double delta);

// Pixel coordinates of a world point, or nullopt for points at or behind
// the image plane.
std::optional<Eigen::Vector2d> project_world_to_pixel(const CameraModel& cam,
                                                      const Eigen::Vector3d& point);

// Evaluates depth_upper_bound and viewing_angle over the full image.
GroundPriorMaps ground_prior_maps(const CameraModel& cam);

}  // namespace skyfleet
