#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "airlane/errors.hpp"

namespace airlane::geo {

/// Geographic position. Altitude is meters above the scenario reference.
struct GeoPoint {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]
    double alt = 0.0;  // meters, >= 0
};

/// Position on the local tangent plane: x east, y north, z altitude (meters).
struct LocalPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Meters per degree of latitude/longitude at the given latitude, from the
/// truncated cosine-series expansion of the meridian and parallel arc lengths.
/// Throws std::domain_error when lat is outside [-90, 90].
std::pair<double, double> meters_per_degree(double lat_deg);

/// Local flat-plane projection anchored at a fixed origin. Valid within
/// +-1 degree of the origin; beyond that the linearization error is not
/// bounded and to_local refuses the point.
struct Projection {
    GeoPoint origin;
    double m_per_deg_lat = 0.0;
    double m_per_deg_lon = 0.0;

    static Projection at(const GeoPoint& origin);

    LocalPoint to_local(const GeoPoint& p) const;
    GeoPoint to_geo(const LocalPoint& p) const;
};

/// Per-axis bounding box over (lat, lon, alt) used to map trajectory
/// coordinates into [0,1]^3. A degenerate axis (zero extent) maps every
/// value to the constant 0.5.
struct NormalizationBox {
    std::array<double, 3> lo{};  // lat, lon, alt
    std::array<double, 3> hi{};

    static NormalizationBox of_points(std::span<const std::array<double, 3>> points);

    bool degenerate(int axis) const { return hi[axis] == lo[axis]; }
    double extent(int axis) const { return hi[axis] - lo[axis]; }

    std::array<double, 3> normalize(const std::array<double, 3>& p) const;
    std::array<double, 3> denormalize(const std::array<double, 3>& u) const;
};

/// Normalize a sequence of (lat, lon, alt) triples into [0,1]^3.
/// Throws RangeError when any point falls outside the box.
std::vector<std::array<double, 3>> normalize(const NormalizationBox& box,
                                             std::span<const std::array<double, 3>> points);

std::vector<std::array<double, 3>> denormalize(const NormalizationBox& box,
                                               std::span<const std::array<double, 3>> points);

}  // namespace airlane::geo
