#include <random>

#include "doctest.h"
#include "skyfleet/errors.hpp"
#include "skyfleet/geometry.hpp"
#include "test_util.hpp"

using namespace skyfleet;
using namespace skyfleet::testutil;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("principal-point ray is the optical axis") {
    const CameraModel nadir = nadir_camera(50.0);
    const Ray down = pixel_ray(nadir, nadir.intrinsics(0, 2), nadir.intrinsics(1, 2));
    CHECK(down.direction.isApprox(Eigen::Vector3d(0, 0, -1), 1e-12));

    CameraModel ident = nadir;
    ident.rotation = Eigen::Matrix3d::Identity();
    const Ray fwd = pixel_ray(ident, ident.intrinsics(0, 2), ident.intrinsics(1, 2));
    CHECK(fwd.direction.isApprox(Eigen::Vector3d(0, 0, 1), 1e-12));
}

TEST_CASE("pixel rays reproject to their pixel") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> du(0.0, 63.0), dv(0.0, 47.0), dt(1.0, 80.0);
    for (int i = 0; i < 1000; ++i) {
        const CameraModel cam = random_camera(rng);
        const double u = du(rng), v = dv(rng);
        const Ray ray = pixel_ray(cam, u, v);
        CHECK(ray.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
        const auto px = project_world_to_pixel(cam, ray.origin + dt(rng) * ray.direction);
        REQUIRE(px.has_value());
        CHECK(px->x() == doctest::Approx(u).epsilon(1e-9));
        CHECK(px->y() == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("depth upper bound: nadir and horizon") {
    const CameraModel nadir = nadir_camera(50.0);
    const auto d = depth_upper_bound(nadir, nadir.intrinsics(0, 2), nadir.intrinsics(1, 2));
    REQUIRE(d.has_value());
    CHECK(*d == doctest::Approx(50.0).epsilon(1e-12));

    // optical axis horizontal: rays at or above the horizon miss the ground
    CameraModel side = nadir;
    side.rotation << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0;
    CHECK_FALSE(depth_upper_bound(side, side.intrinsics(0, 2), 0.0));
}

TEST_CASE("depth upper bound matches the ray-plane oracle") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> du(0.0, 63.0), dv(0.0, 47.0);
    int checked = 0;
    while (checked < 1000) {
        const CameraModel cam = random_camera(rng);
        const double u = du(rng), v = dv(rng);
        const auto d = depth_upper_bound(cam, u, v);
        // independent path: unnormalized direction, parametric intersection
        const Eigen::Vector3d dir =
            cam.rotation * (cam.intrinsics.inverse() * Eigen::Vector3d(u, v, 1.0));
        if (dir.z() >= 0.0) {
            CHECK_FALSE(d);
            continue;
        }
        const double t = -cam.translation.z() / dir.z();
        REQUIRE(d.has_value());
        CHECK(rel_err(*d, t * dir.norm()) <= 1e-9);
        ++checked;
    }
}

TEST_CASE("viewing angle hand cases and elevation oracle") {
    const CameraModel nadir = nadir_camera(50.0);
    CHECK(*viewing_angle(nadir, nadir.intrinsics(0, 2), nadir.intrinsics(1, 2)) ==
          doctest::Approx(M_PI / 2.0).epsilon(1e-12));

    // optical axis z-component -0.5: D_ub = 100 at H = 50, theta = arcsin(0.5)
    CameraModel tilted = nadir;
    tilted.rotation = rot_x(M_PI / 3.0) * nadir_rotation();
    const double cx = tilted.intrinsics(0, 2), cy = tilted.intrinsics(1, 2);
    CHECK(*depth_upper_bound(tilted, cx, cy) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(*viewing_angle(tilted, cx, cy) == doctest::Approx(M_PI / 6.0).epsilon(1e-12));

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> du(0.0, 63.0), dv(0.0, 47.0);
    for (int i = 0; i < 500; ++i) {
        const CameraModel cam = random_camera(rng);
        const double u = du(rng), v = dv(rng);
        const auto theta = viewing_angle(cam, u, v);
        if (!theta) continue;
        CHECK(rel_err(*theta, std::asin(-pixel_ray(cam, u, v).direction.z())) <= 1e-9);
    }
}

TEST_CASE("height-conditioned depth") {
    CHECK(depth_from_height(73.0, 50.0, 0.0) == 73.0);
    CHECK(depth_from_height(73.0, 50.0, 50.0) == doctest::Approx(0.0));
    CHECK(depth_from_height(90.0, 50.0, 5.0) == doctest::Approx(81.0).epsilon(1e-12));
    CHECK_THROWS_AS(depth_from_height(90.0, 50.0, -1.0), DomainError);
    CHECK_THROWS_AS(depth_from_height(90.0, 50.0, 51.0), DomainError);

    // the two closed forms agree: d(1 - h/H) == d - h / sin(theta), sin = H/d
    std::mt19937_64 rng(14);
    // h capped below H: the forms cancel toward 0 there and relative
    // comparison degenerates
    std::uniform_real_distribution<double> dh(10.0, 100.0), dm(1.0, 10.0),
        df(0.0, 0.99);
    for (int i = 0; i < 10000; ++i) {
        const double big_h = dh(rng);
        const double d_upper = big_h * dm(rng);
        const double h = big_h * df(rng);
        const double a = depth_from_height(d_upper, big_h, h);
        const double b = d_upper - h / (big_h / d_upper);
        CHECK(rel_err(a, b) <= 1e-12);
    }
}

TEST_CASE("range ratio") {
    const double theta_lb = M_PI / 6.0;
    CHECK(range_ratio(10.0, theta_lb, theta_lb) == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(std::isinf(range_ratio(3.0, M_PI / 2.0, M_PI / 2.0)));
    CHECK_THROWS_AS(range_ratio(0.5, theta_lb, theta_lb), DomainError);
    CHECK_THROWS_AS(range_ratio(2.0, theta_lb, 2.0 * theta_lb), DomainError);

    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> dk(1.0 + 1e-6, 20.0), da(0.05, M_PI / 2.0 - 0.05);
    for (int i = 0; i < 1000; ++i) {
        const double lb = da(rng);
        CHECK(range_ratio(dk(rng), lb, lb) > 1.0);
    }
}

TEST_CASE("depth sensitivity") {
    CHECK(depth_sensitivity(3.0, M_PI / 2.0, 1e-4) == doctest::Approx(0.0));
    CHECK(depth_sensitivity(2.0, M_PI / 6.0, 1e-4) ==
          doctest::Approx(4.0 * std::sqrt(3.0) * 1e-4).epsilon(1e-9));
    CHECK_THROWS_AS(depth_sensitivity(-1.0, 1.0, 1e-4), DomainError);
    CHECK_THROWS_AS(depth_sensitivity(1.0, 1e-5, 1e-4), DomainError);

    // the first-order bound only clears 1e-3 above theta ~ 0.1002, so the
    // grid starts at 0.105
    const double delta = 1e-4;
    for (double theta = 0.105; theta <= 1.5; theta += 0.01) {
        for (double h : {0.5, 2.0, 8.0}) {
            const double exact = h / std::sin(theta - delta) - h / std::sin(theta);
            CHECK(rel_err(depth_sensitivity(h, theta, delta), exact) <= 1e-3);
        }
    }
}

TEST_CASE("ground prior maps agree with per-pixel evaluation") {
    std::mt19937_64 rng(16);
    const CameraModel cam = random_camera(rng);
    const GroundPriorMaps maps = ground_prior_maps(cam);
    REQUIRE(maps.width == cam.width);
    REQUIRE(maps.height == cam.height);
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const size_t i = maps.idx(u, v);
            const auto d = depth_upper_bound(cam, u, v);
            if (!d) {
                CHECK_FALSE(maps.valid[i]);
                CHECK(std::isnan(maps.depth_upper_bound[i]));
                continue;
            }
            REQUIRE(maps.valid[i]);
            CHECK(maps.depth_upper_bound[i] == doctest::Approx(*d).epsilon(1e-12));
            CHECK(maps.viewing_angle[i] ==
                  doctest::Approx(*viewing_angle(cam, u, v)).epsilon(1e-12));
        }
    }
}

TEST_CASE("camera validation rejects bad rigs") {
    CameraModel cam = nadir_camera(50.0);
    CHECK_NOTHROW(cam.validate());
    CameraModel skew = cam;
    skew.rotation(0, 0) = 2.0;
    CHECK_THROWS_AS(skew.validate(), ConfigError);
    CameraModel drift = cam;
    drift.translation.z() = 49.0;
    CHECK_THROWS_AS(drift.validate(), ConfigError);
}

TEST_SUITE_END();
