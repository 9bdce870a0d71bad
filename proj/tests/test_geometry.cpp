#include <catch2/catch_amalgamated.hpp>

#include "patswarm/geometry.hpp"

using namespace patswarm;

TEST_CASE("wrap_pi maps angles onto [-pi, pi)") {
    CHECK(wrap_pi(0.0) == 0.0);
    CHECK(wrap_pi(kPi) == Catch::Approx(-kPi));
    CHECK(wrap_pi(-kPi) == Catch::Approx(-kPi));
    CHECK(wrap_pi(3.0 * kPi) == Catch::Approx(-kPi));
    CHECK(wrap_pi(kTwoPi + 0.25) == Catch::Approx(0.25));
    CHECK(wrap_pi(-kTwoPi - 0.25) == Catch::Approx(-0.25));
    for (double a = -20.0; a < 20.0; a += 0.37) {
        double w = wrap_pi(a);
        CHECK(w >= -kPi);
        CHECK(w < kPi);
        CHECK(std::abs(std::sin(w) - std::sin(a)) < 1e-12);
        CHECK(std::abs(std::cos(w) - std::cos(a)) < 1e-12);
    }
}

TEST_CASE("wrap_two_pi maps angles onto [0, 2pi)") {
    CHECK(wrap_two_pi(-0.1) == Catch::Approx(kTwoPi - 0.1));
    CHECK(wrap_two_pi(kTwoPi) == Catch::Approx(0.0).margin(1e-15));
    for (double a = -20.0; a < 20.0; a += 0.41) {
        double w = wrap_two_pi(a);
        CHECK(w >= 0.0);
        CHECK(w < kTwoPi);
    }
}

TEST_CASE("vector algebra") {
    Vec3 a{1.0, 2.0, 3.0}, b{-2.0, 0.5, 4.0};
    CHECK(a.dot(b) == Catch::Approx(-2.0 + 1.0 + 12.0));
    Vec3 c = a.cross(b);
    CHECK(c.dot(a) == Catch::Approx(0.0).margin(1e-12));
    CHECK(c.dot(b) == Catch::Approx(0.0).margin(1e-12));
    CHECK((a - a).norm() == 0.0);
    CHECK(Vec3{3.0, 4.0, 0.0}.norm() == Catch::Approx(5.0));
    CHECK_THROWS_AS(Vec3{}.normalized(), std::invalid_argument);
    CHECK(planar_distance({1, 1, 5}, {4, 5, -2}) == Catch::Approx(5.0));
}

TEST_CASE("pose rotation convention") {
    SECTION("flat pose keeps the normal on +z") {
        Pose p = make_pose({0, 0, 0}, 0.7, 0.0);
        CHECK(p.normal().z == Catch::Approx(1.0));
    }
    SECTION("vertical pose tips the normal onto the heading") {
        Pose p = make_pose({0, 0, 0}, 0.0, kPi / 2.0);
        CHECK(p.normal().x == Catch::Approx(1.0));
        CHECK(p.normal().z == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("45 degree pitch with yaw pi/2") {
        Pose p = make_pose({0, 0, 0}, kPi / 2.0, kPi / 4.0);
        double s = std::sqrt(0.5);
        CHECK(p.normal().x == Catch::Approx(0.0).margin(1e-15));
        CHECK(p.normal().y == Catch::Approx(s));
        CHECK(p.normal().z == Catch::Approx(s));
    }
    SECTION("to_world_point composes rotation and translation") {
        Pose p = make_pose({1, 2, 3}, kPi / 2.0, 0.0);
        Vec3 w = p.to_world_point({1, 0, 0});
        CHECK(w.x == Catch::Approx(1.0).margin(1e-12));
        CHECK(w.y == Catch::Approx(3.0));
        CHECK(w.z == Catch::Approx(3.0));
    }
    SECTION("rotation preserves lengths") {
        Pose p = make_pose({0, 0, 0}, 1.1, 0.6);
        Vec3 v{0.3, -0.4, 0.5};
        CHECK(p.to_world_dir(v).norm() == Catch::Approx(v.norm()));
    }
    SECTION("pitch outside [0, pi/2] is rejected") {
        CHECK_THROWS_AS(make_pose({0, 0, 0}, 0.0, -0.2), std::invalid_argument);
        CHECK_THROWS_AS(make_pose({0, 0, 0}, 0.0, 2.0), std::invalid_argument);
    }
    SECTION("yaw is normalized") {
        Pose p = make_pose({0, 0, 0}, 3.0 * kPi, 0.0);
        CHECK(p.yaw == Catch::Approx(-kPi));
    }
}
