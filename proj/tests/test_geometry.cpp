#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "avsid/geometry.hpp"
#include "avsid/image.hpp"
#include "avsid/mic_array.hpp"

using namespace avsid;

TEST_CASE("vec3 algebra") {
    const Vec3 a{1.0, 2.0, 3.0};
    const Vec3 b{-1.0, 0.5, 2.0};
    CHECK(a.dot(b) == Catch::Approx(6.0));
    CHECK((a - b).x == Catch::Approx(2.0));
    CHECK(Vec3{3.0, 4.0, 0.0}.norm() == Catch::Approx(5.0));
    CHECK(distance(a, a) == 0.0);
}

TEST_CASE("rect containment and area") {
    const Rect r{10, 20, 30, 40};
    CHECK(r.area() == 1200);
    CHECK(r.contains(10, 20));
    CHECK(r.contains(39, 59));
    CHECK_FALSE(r.contains(40, 20));
    CHECK_FALSE(r.contains(10, 60));
}

TEST_CASE("intersection over union") {
    const Rect a{0, 0, 10, 10};
    CHECK(intersection_over_union(a, a) == Catch::Approx(1.0));
    CHECK(intersection_over_union(a, Rect{10, 10, 5, 5}) == 0.0);
    // half-overlapping squares: inter 50, union 150
    CHECK(intersection_over_union(a, Rect{5, 0, 10, 10}) == Catch::Approx(50.0 / 150.0));
    CHECK(intersection_over_union(a, Rect{0, 0, 0, 0}) == 0.0);
}

TEST_CASE("gray image bounds") {
    GrayImage img(4, 3, 7);
    CHECK(img.width == 4);
    CHECK(img.height == 3);
    CHECK(img.at(3, 2) == 7);
    CHECK(img.in_bounds(0, 0));
    CHECK_FALSE(img.in_bounds(4, 0));
    CHECK_FALSE(img.in_bounds(0, -1));
    CHECK_THROWS_AS(img.at_checked(4, 0), BoundsError);
    CHECK_THROWS_AS(GrayImage(0, 3), ShapeError);
}

TEST_CASE("double ring array has 16 mics on two circles") {
    const MicArray array = default_double_ring_array();
    REQUIRE(array.mics.size() == 16);
    int inner = 0, outer = 0;
    for (const auto& m : array.mics) {
        const double r = std::hypot(m.x, m.y);
        CHECK(m.z == 0.0);
        if (std::abs(r - 0.1) < 1e-9) ++inner;
        if (std::abs(r - 0.2) < 1e-9) ++outer;
    }
    CHECK(inner == 7);
    CHECK(outer == 9);
}

TEST_CASE("expected tdoa sign follows path difference") {
    MicArray array;
    array.mics = {Vec3{-0.1, 0.0, 0.0}, Vec3{0.1, 0.0, 0.0}};
    const Vec3 right{1.0, 0.0, 1.0};  // closer to mic 1
    // |p - a| > |p - b|  =>  positive tdoa(a, b)
    CHECK(expected_tdoa(array, 0, 1, right) > 0.0);
    CHECK(expected_tdoa(array, 1, 0, right) < 0.0);
    CHECK(expected_tdoa(array, 0, 1, Vec3{0.0, 0.0, 1.0}) == Catch::Approx(0.0).margin(1e-15));
    // magnitude bounded by mic spacing over c
    CHECK(std::abs(expected_tdoa(array, 0, 1, right)) <= 0.2 / kSpeedOfSound + 1e-12);
}

TEST_CASE("alias limit shrinks with wider spacing") {
    const MicArray tight = build_double_ring_array(0.1, 0.2, 7, 9, 0.0);
    const MicArray wide = build_double_ring_array(0.2, 0.4, 7, 9, 0.0);
    CHECK(spatial_alias_limit(wide) < spatial_alias_limit(tight));
    CHECK(spatial_alias_limit(wide) > 0.0);
}

TEST_CASE("array validation rejects degenerate layouts") {
    MicArray bad;
    bad.mics = {Vec3{0.0, 0.0, 0.0}, Vec3{0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(bad.validate(), InvalidGeometryError);
    MicArray none;
    CHECK_THROWS_AS(none.validate(), InvalidGeometryError);
}
