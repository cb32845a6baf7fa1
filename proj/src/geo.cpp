#include "airlane/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace airlane::geo {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kValidityWindowDeg = 1.0;
}  // namespace

std::pair<double, double> meters_per_degree(double lat_deg) {
    if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) {
        throw std::domain_error("latitude out of range [-90, 90]: " + std::to_string(lat_deg));
    }
    const double phi = lat_deg * kDegToRad;
    const double m_lat = 111132.92 - 559.82 * std::cos(2.0 * phi) + 1.175 * std::cos(4.0 * phi) +
                         0.0023 * std::cos(6.0 * phi);
    const double m_lon =
        111412.84 * std::cos(phi) - 93.5 * std::cos(3.0 * phi) + 0.118 * std::cos(5.0 * phi);
    return {m_lat, m_lon};
}

Projection Projection::at(const GeoPoint& origin) {
    const auto [m_lat, m_lon] = meters_per_degree(origin.lat);
    return Projection{origin, m_lat, m_lon};
}

LocalPoint Projection::to_local(const GeoPoint& p) const {
    if (std::abs(p.lat - origin.lat) > kValidityWindowDeg ||
        std::abs(p.lon - origin.lon) > kValidityWindowDeg) {
        throw RangeError("point outside the +-1 degree projection validity window");
    }
    return LocalPoint{(p.lon - origin.lon) * m_per_deg_lon, (p.lat - origin.lat) * m_per_deg_lat,
                      p.alt};
}

GeoPoint Projection::to_geo(const LocalPoint& p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
        throw RangeError("non-finite local point");
    }
    return GeoPoint{origin.lat + p.y / m_per_deg_lat, origin.lon + p.x / m_per_deg_lon, p.z};
}

NormalizationBox NormalizationBox::of_points(std::span<const std::array<double, 3>> points) {
    NormalizationBox box;
    if (points.empty()) return box;
    box.lo = box.hi = points[0];
    for (const auto& p : points) {
        for (int a = 0; a < 3; ++a) {
            box.lo[a] = std::min(box.lo[a], p[a]);
            box.hi[a] = std::max(box.hi[a], p[a]);
        }
    }
    return box;
}

std::array<double, 3> NormalizationBox::normalize(const std::array<double, 3>& p) const {
    std::array<double, 3> u{};
    for (int a = 0; a < 3; ++a) {
        if (degenerate(a)) {
            if (p[a] != lo[a]) throw RangeError("point outside degenerate normalization axis");
            u[a] = 0.5;
        } else {
            if (p[a] < lo[a] || p[a] > hi[a]) throw RangeError("point outside normalization box");
            u[a] = (p[a] - lo[a]) / (hi[a] - lo[a]);
        }
    }
    return u;
}

std::array<double, 3> NormalizationBox::denormalize(const std::array<double, 3>& u) const {
    std::array<double, 3> p{};
    for (int a = 0; a < 3; ++a) {
        p[a] = degenerate(a) ? lo[a] : lo[a] + u[a] * (hi[a] - lo[a]);
    }
    return p;
}

std::vector<std::array<double, 3>> normalize(const NormalizationBox& box,
                                             std::span<const std::array<double, 3>> points) {
    std::vector<std::array<double, 3>> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(box.normalize(p));
    return out;
}

std::vector<std::array<double, 3>> denormalize(const NormalizationBox& box,
                                               std::span<const std::array<double, 3>> points) {
    std::vector<std::array<double, 3>> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(box.denormalize(p));
    return out;
}

}  // namespace airlane::geo
