#include "airlane/geometry.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "support/raster.hpp"

using namespace airlane::geom;

namespace {

Polygon unit_square() { return {{0, 0}, {10, 0}, {10, 10}, {0, 10}}; }

Polygon l_shape() {
    return {{0, 0}, {20, 0}, {20, 10}, {10, 10}, {10, 20}, {0, 20}};
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("orientation sign convention") {
    CHECK(orient({0, 0}, {1, 0}, {1, 1}) > 0);
    CHECK(orient({0, 0}, {1, 0}, {1, -1}) < 0);
    CHECK(orient({0, 0}, {1, 0}, {2, 0}) == 0);
}

TEST_CASE("segment intersection including grazing contact") {
    CHECK(segments_intersect({0, 0}, {10, 10}, {0, 10}, {10, 0}));
    CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    // Shared endpoint counts.
    CHECK(segments_intersect({0, 0}, {5, 5}, {5, 5}, {10, 0}));
    // T-junction counts.
    CHECK(segments_intersect({0, 0}, {10, 0}, {5, -5}, {5, 0}));
    // Collinear overlap counts; collinear but disjoint does not.
    CHECK(segments_intersect({0, 0}, {10, 0}, {5, 0}, {15, 0}));
    CHECK_FALSE(segments_intersect({0, 0}, {4, 0}, {5, 0}, {9, 0}));
}

TEST_CASE("point in polygon with boundary inclusive") {
    const Polygon sq = unit_square();
    CHECK(point_in_polygon({5, 5}, sq));
    CHECK_FALSE(point_in_polygon({15, 5}, sq));
    CHECK(point_in_polygon({0, 5}, sq));
    CHECK(point_in_polygon({10, 10}, sq));
    CHECK(point_in_polygon({5, 0}, sq));

    const Polygon l = l_shape();
    CHECK(point_in_polygon({5, 15}, l));
    CHECK(point_in_polygon({15, 5}, l));
    CHECK_FALSE(point_in_polygon({15, 15}, l));
}

TEST_CASE("segment versus polygon") {
    const Polygon sq = unit_square();
    CHECK(segment_intersects_polygon({-5, 5}, {15, 5}, sq));
    CHECK(segment_intersects_polygon({2, 2}, {8, 8}, sq));  // fully inside
    CHECK(segment_intersects_polygon({-5, 10}, {15, 10}, sq));  // grazes the top edge
    CHECK_FALSE(segment_intersects_polygon({-5, 15}, {15, 15}, sq));
    CHECK_FALSE(segment_intersects_polygon({11, 0}, {11, 10}, sq));
}

TEST_CASE("rectangle versus polygon") {
    const Polygon sq = unit_square();
    CHECK(rect_intersects_polygon({{5, 5}, {15, 15}}, sq));
    CHECK(rect_intersects_polygon({{2, 2}, {8, 8}}, sq));     // rect inside polygon
    CHECK(rect_intersects_polygon({{-5, -5}, {15, 15}}, sq)); // polygon inside rect
    CHECK(rect_intersects_polygon({{10, 0}, {20, 10}}, sq));  // shared edge
    CHECK_FALSE(rect_intersects_polygon({{11, 11}, {20, 20}}, sq));

    // Thin rectangle crossing the polygon with no vertex of either inside the other.
    const Rect blade{{-5, 4}, {15, 6}};
    CHECK(rect_intersects_polygon(blade, sq));
    CHECK(testsupport::raster_rect_hits_polygon(blade, sq, 0.5));
}

TEST_CASE("distances") {
    CHECK(dist_point_segment({0, 5}, {-10, 0}, {10, 0}) == doctest::Approx(5.0));
    CHECK(dist_point_segment({20, 5}, {-10, 0}, {10, 0}) ==
          doctest::Approx(std::sqrt(125.0)));
    CHECK(dist_segment_segment({0, 0}, {10, 0}, {0, 3}, {10, 3}) == doctest::Approx(3.0));
    CHECK(dist_segment_segment({0, 0}, {10, 10}, {0, 10}, {10, 0}) == doctest::Approx(0.0));
    CHECK(dist_segment_segment({0, 0}, {1, 0}, {3, 0}, {4, 0}) == doctest::Approx(2.0));

    const Polygon sq = unit_square();
    CHECK(dist_point_polygon({5, 5}, sq) == doctest::Approx(0.0));
    CHECK(dist_point_polygon({10, 5}, sq) == doctest::Approx(0.0));
    CHECK(dist_point_polygon({13, 5}, sq) == doctest::Approx(3.0));
    CHECK(dist_point_polygon({13, 14}, sq) == doctest::Approx(5.0));

    CHECK(dist_segment_polygon({12, -5}, {12, 15}, sq) == doctest::Approx(2.0));
    CHECK(dist_segment_polygon({2, 2}, {8, 2}, sq) == doctest::Approx(0.0));
    CHECK(dist_segment_polygon({-5, 5}, {15, 5}, sq) == doctest::Approx(0.0));
}

TEST_CASE("polygon area and simplicity") {
    CHECK(polygon_area(unit_square()) == doctest::Approx(100.0));
    CHECK(polygon_area(l_shape()) == doctest::Approx(300.0));
    const Polygon tri{{0, 0}, {10, 0}, {0, 10}};
    CHECK(polygon_area(tri) == doctest::Approx(50.0));

    CHECK(polygon_is_simple(unit_square()));
    CHECK(polygon_is_simple(l_shape()));
    const Polygon bowtie{{0, 0}, {10, 10}, {10, 0}, {0, 10}};
    CHECK_FALSE(polygon_is_simple(bowtie));
    CHECK_FALSE(polygon_is_simple(Polygon{{0, 0}, {1, 1}}));
}

TEST_CASE("segment clipping against a rectangle") {
    const Rect r{{0, 0}, {10, 10}};

    auto full = clip_segment_to_rect({2, 2}, {8, 8}, r);
    REQUIRE(full.has_value());
    CHECK(full->first == doctest::Approx(0.0));
    CHECK(full->second == doctest::Approx(1.0));

    auto half = clip_segment_to_rect({-10, 5}, {10, 5}, r);
    REQUIRE(half.has_value());
    CHECK(half->first == doctest::Approx(0.5));
    CHECK(half->second == doctest::Approx(1.0));

    auto cross = clip_segment_to_rect({5, -10}, {5, 20}, r);
    REQUIRE(cross.has_value());
    CHECK(cross->first == doctest::Approx(1.0 / 3.0));
    CHECK(cross->second == doctest::Approx(2.0 / 3.0));

    CHECK_FALSE(clip_segment_to_rect({-5, 15}, {15, 25}, r).has_value());

    // Grazing along an edge yields a non-empty interval.
    auto graze = clip_segment_to_rect({-10, 10}, {20, 10}, r);
    REQUIRE(graze.has_value());
    CHECK(graze->second >= graze->first);
}

TEST_CASE("union area of rectangles, exact cases") {
    CHECK(union_area({}) == doctest::Approx(0.0));

    std::vector<Rect> disjoint{{{0, 0}, {10, 10}}, {{20, 20}, {30, 25}}};
    CHECK(union_area(disjoint) == doctest::Approx(100.0 + 50.0));

    std::vector<Rect> nested{{{0, 0}, {10, 10}}, {{2, 2}, {8, 8}}};
    CHECK(union_area(nested) == doctest::Approx(100.0));

    std::vector<Rect> overlap{{{0, 0}, {10, 10}}, {{5, 5}, {15, 15}}};
    CHECK(union_area(overlap) == doctest::Approx(100.0 + 100.0 - 25.0));

    std::vector<Rect> same{{{0, 0}, {10, 10}}, {{0, 0}, {10, 10}}, {{0, 0}, {10, 10}}};
    CHECK(union_area(same) == doctest::Approx(100.0));
}

TEST_CASE("union area matches a rasterized estimate on random layouts") {
    std::mt19937_64 rng(20240811);
    std::uniform_real_distribution<double> pos(0.0, 80.0);
    std::uniform_real_distribution<double> size(5.0, 40.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Rect> rects;
        const int n = 2 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            const double x = pos(rng);
            const double y = pos(rng);
            rects.push_back({{x, y}, {x + size(rng), y + size(rng)}});
        }
        const double exact = union_area(rects);
        const double approx = testsupport::raster_union_area(rects, 0.25);
        CHECK(std::abs(exact - approx) <= 0.01 * exact + 1.0);
    }
}

TEST_CASE("union area never exceeds the sum and never undershoots the max") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(-50.0, 50.0);
    std::uniform_real_distribution<double> size(1.0, 60.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Rect> rects;
        double sum = 0.0;
        double largest = 0.0;
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            const double x = pos(rng);
            const double y = pos(rng);
            const Rect r{{x, y}, {x + size(rng), y + size(rng)}};
            rects.push_back(r);
            const double a = r.width() * r.height();
            sum += a;
            largest = std::max(largest, a);
        }
        const double u = union_area(rects);
        CHECK(u <= sum + 1e-9);
        CHECK(u >= largest - 1e-9);
    }
}

TEST_CASE("boxes") {
    Box3 b{{0, 0, 0}, {10, 20, 30}};
    CHECK(b.contains(0, 0, 0));
    CHECK(b.contains(10, 20, 30));
    CHECK_FALSE(b.contains(10.01, 0, 0));
    CHECK(b.extent(2) == doctest::Approx(30.0));

    b.expand({-5, 25, 15});
    CHECK(b.lo[0] == doctest::Approx(-5.0));
    CHECK(b.hi[1] == doctest::Approx(25.0));

    Box3 p = Box3::of_point({1, 2, 3});
    CHECK(p.extent(0) == doctest::Approx(0.0));
    p.inflate({1, 1, 1});
    CHECK(p.contains(0.5, 1.5, 2.5));

    const Rect fp = Box3{{1, 2, 3}, {4, 6, 8}}.footprint();
    CHECK(fp.lo.x == doctest::Approx(1.0));
    CHECK(fp.hi.y == doctest::Approx(6.0));
}

}  // TEST_SUITE
