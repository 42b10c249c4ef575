#include "skyfleet/geometry.hpp"

#include <cmath>
#include <limits>

#include "skyfleet/errors.hpp"

namespace skyfleet {

void CameraModel::validate() const {
    if (width <= 0 || height <= 0) throw ConfigError("camera image size must be positive");
    const double fx = intrinsics(0, 0);
    const double fy = intrinsics(1, 1);
    const double cx = intrinsics(0, 2);
    const double cy = intrinsics(1, 2);
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera focal lengths must be positive");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
        throw ConfigError("camera principal point outside the image");
    const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
    if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
        throw ConfigError("camera rotation is not orthonormal");
    if (std::abs(altitude - translation.z()) > 1e-9)
        throw ConfigError("camera altitude inconsistent with translation z");
}

Ray pixel_ray(const CameraModel& cam, double u, double v) {
    if (std::abs(cam.intrinsics.determinant()) < 1e-12)
        throw ConfigError("camera intrinsics are singular");
    const Eigen::Vector3d pix(u, v, 1.0);
    Eigen::Vector3d dir = cam.rotation * (cam.intrinsics.inverse() * pix);
    return Ray{cam.translation, dir.normalized()};
}

std::optional<double> depth_upper_bound(const CameraModel& cam, double u, double v) {
    if (!(cam.altitude > 0.0)) throw ConfigError("camera altitude must be positive");
    const Ray ray = pixel_ray(cam, u, v);
    if (ray.direction.z() >= 0.0) return std::nullopt;
    const double t = -ray.origin.z() / ray.direction.z();
    if (t <= 0.0) return std::nullopt;
    return t;  // direction is unit length, so t is the metric distance
}

std::optional<double> viewing_angle(const CameraModel& cam, double u, double v) {
    const auto d = depth_upper_bound(cam, u, v);
    if (!d) return std::nullopt;
    const double s = std::min(1.0, cam.altitude / *d);
    return std::asin(s);
}

double depth_from_height(double d_upper, double altitude, double h) {
    if (!(altitude > 0.0)) throw ConfigError("altitude must be positive");
    if (h < 0.0 || h > altitude) throw DomainError("height outside [0, altitude]");
    return d_upper * (1.0 - h / altitude);
}

double range_ratio(double altitude_multiple_k, double theta_pixel, double theta_lower_bound) {
    if (!(altitude_multiple_k >= 1.0)) throw DomainError("altitude multiple k must be >= 1");
    if (!(theta_lower_bound > 0.0) || !(theta_lower_bound <= theta_pixel) ||
        !(theta_pixel <= M_PI / 2.0))
        throw DomainError("require 0 < theta_lb <= theta <= pi/2");
    const double denom = 1.0 / std::sin(theta_lower_bound) - 1.0;
    const double numer = altitude_multiple_k / std::sin(theta_pixel) - altitude_multiple_k + 1.0;
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return numer / denom;
}

double depth_sensitivity(double h, double theta, double delta) {
    if (!(h > 0.0)) throw DomainError("height must be positive");
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (!(theta - delta > 0.0) || !(theta <= M_PI / 2.0))
        throw DomainError("require 0 < theta - delta < theta <= pi/2");
    const double s = std::sin(theta);
    return h * std::cos(theta) / (s * s) * delta;
}

std::optional<Eigen::Vector2d> project_world_to_pixel(const CameraModel& cam,
                                                      const Eigen::Vector3d& point) {
    const Eigen::Vector3d p_cam = cam.rotation.transpose() * (point - cam.translation);
    if (p_cam.z() <= 0.0) return std::nullopt;
    const Eigen::Vector3d hom = cam.intrinsics * (p_cam / p_cam.z());
    return Eigen::Vector2d(hom.x(), hom.y());
}

GroundPriorMaps ground_prior_maps(const CameraModel& cam) {
    cam.validate();
    GroundPriorMaps maps;
    maps.width = cam.width;
    maps.height = cam.height;
    const size_t n = static_cast<size_t>(cam.width) * cam.height;
    maps.depth_upper_bound.assign(n, std::numeric_limits<double>::quiet_NaN());
    maps.viewing_angle.assign(n, std::numeric_limits<double>::quiet_NaN());
    maps.valid.assign(n, 0);
    const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const Eigen::Vector3d dir =
                (cam.rotation * (k_inv * Eigen::Vector3d(u, v, 1.0))).normalized();
            if (dir.z() >= 0.0) continue;
            const double t = -cam.translation.z() / dir.z();
            if (t <= 0.0) continue;
            const size_t i = maps.idx(u, v);
            maps.depth_upper_bound[i] = t;
            maps.viewing_angle[i] = std::asin(std::min(1.0, cam.altitude / t));
            maps.valid[i] = 1;
        }
    }
    return maps;
}

}  // namespace skyfleet
