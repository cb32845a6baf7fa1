#include "airlane/geometry.hpp"

#include <algorithm>
#include <limits>

namespace airlane::geom {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b - a).cross(c - a);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& q) {
    return q.x >= std::min(a.x, b.x) && q.x <= std::max(a.x, b.x) &&
           q.y >= std::min(a.y, b.y) && q.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Vec2& a1, const Vec2& a2, const Vec2& b1, const Vec2& b2) {
    const double d1 = orient(b1, b2, a1);
    const double d2 = orient(b1, b2, a2);
    const double d3 = orient(a1, a2, b1);
    const double d4 = orient(a1, a2, b2);

    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    if (d1 == 0 && on_segment(b1, b2, a1)) return true;
    if (d2 == 0 && on_segment(b1, b2, a2)) return true;
    if (d3 == 0 && on_segment(a1, a2, b1)) return true;
    if (d4 == 0 && on_segment(a1, a2, b2)) return true;
    return false;
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
    const size_t n = poly.size();
    if (n < 3) return false;
    bool inside = false;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& vi = poly[i];
        const Vec2& vj = poly[j];
        // boundary counts as inside
        if (orient(vi, vj, p) == 0 && on_segment(vi, vj, p)) return true;
        if ((vi.y > p.y) != (vj.y > p.y)) {
            const double x_cross = vi.x + (p.y - vi.y) / (vj.y - vi.y) * (vj.x - vi.x);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool segment_intersects_polygon(const Vec2& a, const Vec2& b, std::span<const Vec2> poly) {
    const size_t n = poly.size();
    if (n < 3) return false;
    if (point_in_polygon(a, poly) || point_in_polygon(b, poly)) return true;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        if (segments_intersect(a, b, poly[j], poly[i])) return true;
    }
    return false;
}

bool rect_intersects_polygon(const Rect& r, std::span<const Vec2> poly) {
    const size_t n = poly.size();
    if (n < 3) return false;
    for (const Vec2& v : poly) {
        if (r.contains(v)) return true;
    }
    const Polygon cs = r.corners();
    for (const Vec2& c : cs) {
        if (point_in_polygon(c, poly)) return true;
    }
    for (size_t k = 0; k < 4; ++k) {
        const Vec2& a = cs[k];
        const Vec2& b = cs[(k + 1) % 4];
        for (size_t i = 0, j = n - 1; i < n; j = i++) {
            if (segments_intersect(a, b, poly[j], poly[i])) return true;
        }
    }
    return false;
}

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 == 0.0) return dist(p, a);
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return dist(p, a + ab * t);
}

double dist_segment_segment(const Vec2& a1, const Vec2& a2, const Vec2& b1, const Vec2& b2) {
    if (segments_intersect(a1, a2, b1, b2)) return 0.0;
    return std::min(std::min(dist_point_segment(a1, b1, b2), dist_point_segment(a2, b1, b2)),
                    std::min(dist_point_segment(b1, a1, a2), dist_point_segment(b2, a1, a2)));
}

double dist_point_polygon(const Vec2& p, std::span<const Vec2> poly) {
    if (point_in_polygon(p, poly)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        best = std::min(best, dist_point_segment(p, poly[j], poly[i]));
    }
    return best;
}

double dist_segment_polygon(const Vec2& a, const Vec2& b, std::span<const Vec2> poly) {
    if (segment_intersects_polygon(a, b, poly)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        best = std::min(best, dist_segment_segment(a, b, poly[j], poly[i]));
    }
    return best;
}

double polygon_area(std::span<const Vec2> poly) {
    const size_t n = poly.size();
    double acc = 0.0;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        acc += poly[j].cross(poly[i]);
    }
    return std::abs(acc) * 0.5;
}

bool polygon_is_simple(std::span<const Vec2> poly) {
    const size_t n = poly.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a1 = poly[i];
        const Vec2& a2 = poly[(i + 1) % n];
        for (size_t j = i + 1; j < n; ++j) {
            // skip edges sharing a vertex
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_intersect(a1, a2, poly[j], poly[(j + 1) % n])) return false;
        }
    }
    return true;
}

std::optional<std::pair<double, double>> clip_segment_to_rect(const Vec2& a, const Vec2& b,
                                                              const Rect& r) {
    double t0 = 0.0;
    double t1 = 1.0;
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - r.lo.x, r.hi.x - a.x, a.y - r.lo.y, r.hi.y - a.y};
    for (int k = 0; k < 4; ++k) {
        if (p[k] == 0.0) {
            if (q[k] < 0.0) return std::nullopt;
            continue;
        }
        const double t = q[k] / p[k];
        if (p[k] < 0.0) {
            if (t > t1) return std::nullopt;
            t0 = std::max(t0, t);
        } else {
            if (t < t0) return std::nullopt;
            t1 = std::min(t1, t);
        }
    }
    if (t0 > t1) return std::nullopt;
    return std::make_pair(t0, t1);
}

double union_area(std::span<const Rect> rects) {
    std::vector<double> xs;
    xs.reserve(rects.size() * 2);
    for (const Rect& r : rects) {
        if (r.width() <= 0.0 || r.height() <= 0.0) continue;
        xs.push_back(r.lo.x);
        xs.push_back(r.hi.x);
    }
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    double total = 0.0;
    std::vector<std::pair<double, double>> spans;
    for (size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x0 = xs[i];
        const double x1 = xs[i + 1];
        spans.clear();
        for (const Rect& r : rects) {
            if (r.width() <= 0.0 || r.height() <= 0.0) continue;
            if (r.lo.x <= x0 && r.hi.x >= x1) spans.emplace_back(r.lo.y, r.hi.y);
        }
        if (spans.empty()) continue;
        std::sort(spans.begin(), spans.end());
        double merged = 0.0;
        double cur_lo = spans[0].first;
        double cur_hi = spans[0].second;
        for (size_t k = 1; k < spans.size(); ++k) {
            if (spans[k].first > cur_hi) {
                merged += cur_hi - cur_lo;
                cur_lo = spans[k].first;
                cur_hi = spans[k].second;
            } else {
                cur_hi = std::max(cur_hi, spans[k].second);
            }
        }
        merged += cur_hi - cur_lo;
        total += merged * (x1 - x0);
    }
    return total;
}

}  // namespace airlane::geom
