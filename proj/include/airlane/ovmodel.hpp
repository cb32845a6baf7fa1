#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "airlane/geo.hpp"
#include "airlane/geometry.hpp"
#include "airlane/reach.hpp"
#include "airlane/sim.hpp"

namespace airlane::ov {

/// Horizontal histogram of aircraft positions over one entry's area.
/// Cells are square, row-major, anchored at `origin` (local meters, snapped
/// to a multiple of cell_size). Sum of counts equals n_total: the grid is
/// sized to cover every sample, so nothing is dropped.
struct OccupancyGrid {
    geom::Vec2 origin;
    double cell_size = 10.0;
    int cols = 0;
    int rows = 0;
    std::vector<int> counts;
    int n_total = 0;

    int count_at(int col, int row) const {
        return counts[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(col)];
    }

    /// Fraction of aircraft in the cell containing p; 0 outside the grid.
    double probability(const geom::Vec2& p) const;

    geom::Rect extent() const {
        return {origin, {origin.x + cols * cell_size, origin.y + rows * cell_size}};
    }
};

/// One (region, time, distribution) entry of an operational volume.
struct OvEntry {
    double t = 0.0;     // absolute seconds since scenario epoch
    geom::Box3 region;  // local meters
    OccupancyGrid grid;
};

/// A reserved block of airspace over one horizon: entries at 1 s spacing
/// covering [t0, t0 + t_d], plus the offset to the successor volume.
struct OperationalVolume {
    std::vector<OvEntry> entries;
    double t0 = 0.0;
    double t_d = 0.0;
    double delta = 0.0;
};

/// Ordered chain of volumes released for one aircraft on one route.
struct Contract {
    std::string route_id;
    std::string aircraft_id;
    std::vector<OperationalVolume> ovs;
};

struct NoFlyZone {
    std::string id;
    geom::Polygon polygon;               // local meters, simple, >= 3 vertices
    std::array<double, 2> alt_range{0.0, 1e9};
};

/// Assemble one volume from a meters-space reach tube and the batch that
/// produced it: one entry per logged second, region = tube segment box,
/// occupancy grid binned from the batch positions at that second.
/// Throws ConfigError when tube and batch are misaligned or delta is outside
/// [0, duration).
OperationalVolume build_ov(const reach::ReachTube& tube, const sim::TrajectorySet& traj,
                           const geo::Projection& proj, double delta, double cell_size);

/// Area of the union of all entry footprints, in square kilometers.
/// Overlapping entries are counted once.
double ov_total_volume(const OperationalVolume& ov);

/// Fraction of the batch inside the cell containing s at the entry whose
/// 1 s interval contains t. Throws RangeError when t is outside
/// [t0, t0 + t_d]; inside the window but outside the grid yields 0.
double probability(const OperationalVolume& ov, const geo::LocalPoint& s, double t);

/// True iff t falls inside the volume's window and p inside the region box
/// of the entry whose interval contains t.
bool ov_contains(const OperationalVolume& ov, const geo::LocalPoint& p, double t);

/// True iff any volume of the contract contains (p, t). During the delta
/// overlap two volumes are simultaneously valid; either suffices.
bool contract_contains(const Contract& c, const geo::LocalPoint& p, double t);

/// True iff any entry's footprint touches the polygon while the entry's
/// altitude span overlaps the zone's altitude range.
bool ov_intersects_nfz(const OperationalVolume& ov, const NoFlyZone& nfz);

/// Check the contract invariants: per-volume entry spacing and duration,
/// uniform t_d, and the start-time chain t0[j+1] = t0[j] + (t_d - delta).
/// Returns human-readable violations; empty means valid. An empty contract
/// is vacuously valid.
std::vector<std::string> validate_contract(const Contract& c);

nlohmann::json contract_to_json(const Contract& c);
Contract contract_from_json(const nlohmann::json& j);

/// GeoJSON FeatureCollection with one Polygon per entry footprint,
/// properties t and ov_index.
nlohmann::json contract_footprints_geojson(const Contract& c, const geo::Projection& proj);

}  // namespace airlane::ov
