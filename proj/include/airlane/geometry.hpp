#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace airlane::geom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

using Polygon = std::vector<Vec2>;

/// Axis-aligned rectangle in the horizontal plane.
struct Rect {
    Vec2 lo;
    Vec2 hi;

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    bool contains(const Vec2& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    bool overlaps(const Rect& o) const {
        return lo.x <= o.hi.x && hi.x >= o.lo.x && lo.y <= o.hi.y && hi.y >= o.lo.y;
    }
    Polygon corners() const {
        return {{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}};
    }
};

/// Axis-aligned box in local 3D coordinates (x east, y north, z altitude).
struct Box3 {
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};

    bool contains(double x, double y, double z) const {
        return x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1] && z >= lo[2] && z <= hi[2];
    }
    double extent(int axis) const { return hi[axis] - lo[axis]; }
    Rect footprint() const { return {{lo[0], lo[1]}, {hi[0], hi[1]}}; }

    void expand(const std::array<double, 3>& p) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    void inflate(const std::array<double, 3>& r) {
        for (int a = 0; a < 3; ++a) {
            lo[a] -= r[a];
            hi[a] += r[a];
        }
    }
    static Box3 of_point(const std::array<double, 3>& p) { return {p, p}; }
};

// ---------------------------------------------------------------------------
// Predicates. Touching counts as intersecting throughout; collision checks
// must treat a grazing contact as a hit.
// ---------------------------------------------------------------------------

/// Sign of the turn a->b->c: >0 left, <0 right, 0 collinear.
double orient(const Vec2& a, const Vec2& b, const Vec2& c);

/// True if q lies on segment [a,b] (assumes a, b, q collinear).
bool on_segment(const Vec2& a, const Vec2& b, const Vec2& q);

bool segments_intersect(const Vec2& a1, const Vec2& a2, const Vec2& b1, const Vec2& b2);

/// Crossing-number test; points on the boundary count as inside.
bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly);

/// True if segment [a,b] crosses the polygon boundary or has an endpoint inside.
bool segment_intersects_polygon(const Vec2& a, const Vec2& b, std::span<const Vec2> poly);

bool rect_intersects_polygon(const Rect& r, std::span<const Vec2> poly);

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b);
double dist_segment_segment(const Vec2& a1, const Vec2& a2, const Vec2& b1, const Vec2& b2);

/// Distance from p to the polygon; 0 when p is inside or on the boundary.
double dist_point_polygon(const Vec2& p, std::span<const Vec2> poly);

/// Distance from segment [a,b] to the polygon; 0 on overlap or containment.
double dist_segment_polygon(const Vec2& a, const Vec2& b, std::span<const Vec2> poly);

double polygon_area(std::span<const Vec2> poly);

/// True for a simple polygon (>= 3 vertices, no self-intersections).
bool polygon_is_simple(std::span<const Vec2> poly);

/// Liang-Barsky clip of segment [a,b] against rect; returns the parameter
/// interval [t0,t1] of the overlap, or nullopt when the segment misses.
std::optional<std::pair<double, double>> clip_segment_to_rect(const Vec2& a, const Vec2& b,
                                                              const Rect& r);

/// Exact area of the union of axis-aligned rectangles (overlaps counted once).
double union_area(std::span<const Rect> rects);

}  // namespace airlane::geom
