#include "airlane/ovmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "airlane/errors.hpp"

namespace airlane::ov {

namespace {

constexpr double kTimeTol = 1e-9;

OccupancyGrid build_grid(const geom::Rect& must_cover, const std::vector<geom::Vec2>& samples,
                         double cell_size) {
    geom::Rect area = must_cover;
    for (const auto& s : samples) {
        area.lo.x = std::min(area.lo.x, s.x);
        area.lo.y = std::min(area.lo.y, s.y);
        area.hi.x = std::max(area.hi.x, s.x);
        area.hi.y = std::max(area.hi.y, s.y);
    }

    OccupancyGrid grid;
    grid.cell_size = cell_size;
    grid.origin = {std::floor(area.lo.x / cell_size) * cell_size,
                   std::floor(area.lo.y / cell_size) * cell_size};
    grid.cols = std::max(1, static_cast<int>(std::ceil((area.hi.x - grid.origin.x) / cell_size -
                                                       kTimeTol)));
    grid.rows = std::max(1, static_cast<int>(std::ceil((area.hi.y - grid.origin.y) / cell_size -
                                                       kTimeTol)));
    grid.counts.assign(static_cast<std::size_t>(grid.cols) * static_cast<std::size_t>(grid.rows),
                       0);
    grid.n_total = static_cast<int>(samples.size());

    for (const auto& s : samples) {
        const int col = std::min(static_cast<int>(std::floor((s.x - grid.origin.x) / cell_size)),
                                 grid.cols - 1);
        const int row = std::min(static_cast<int>(std::floor((s.y - grid.origin.y) / cell_size)),
                                 grid.rows - 1);
        ++grid.counts[static_cast<std::size_t>(row) * static_cast<std::size_t>(grid.cols) +
                      static_cast<std::size_t>(col)];
    }
    return grid;
}

/// Entry index for a query time; the entry's interval [t_k, t_k+1) contains
/// t, with the final entry closing the window.
std::size_t entry_index(const OperationalVolume& ov, double t) {
    const auto idx = static_cast<std::ptrdiff_t>(std::floor(t - ov.t0));
    const auto last = static_cast<std::ptrdiff_t>(ov.entries.size()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, last));
}

}  // namespace

double OccupancyGrid::probability(const geom::Vec2& p) const {
    if (n_total <= 0) return 0.0;
    const int col = static_cast<int>(std::floor((p.x - origin.x) / cell_size));
    const int row = static_cast<int>(std::floor((p.y - origin.y) / cell_size));
    if (col < 0 || col >= cols || row < 0 || row >= rows) return 0.0;
    return static_cast<double>(count_at(col, row)) / static_cast<double>(n_total);
}

OperationalVolume build_ov(const reach::ReachTube& tube, const sim::TrajectorySet& traj,
                           const geo::Projection& proj, double delta, double cell_size) {
    if (tube.duration != traj.duration || std::abs(tube.t0 - traj.t0) > kTimeTol) {
        throw ConfigError("reach tube and trajectory batch are not time-aligned");
    }
    if (cell_size <= 0.0) throw ConfigError("cell size must be positive");
    if (delta < 0.0 || delta >= tube.duration) {
        throw ConfigError("delta must lie in [0, duration)");
    }
    const auto samples_per_traj = static_cast<std::size_t>(traj.duration) + 1;
    for (const auto& t : traj.trajectories) {
        if (t.size() != samples_per_traj) {
            throw ConfigError("every trajectory must carry one sample per logged second");
        }
    }

    OperationalVolume ov;
    ov.t0 = tube.t0;
    ov.t_d = tube.duration;
    ov.delta = delta;
    ov.entries.reserve(samples_per_traj);

    for (std::size_t k = 0; k < samples_per_traj; ++k) {
        OvEntry entry;
        entry.t = tube.t0 + static_cast<double>(k);
        entry.region = tube.segments[std::min(k, tube.segments.size() - 1)];

        std::vector<geom::Vec2> positions;
        positions.reserve(traj.size());
        for (const auto& trajectory : traj.trajectories) {
            const geo::LocalPoint l = proj.to_local(trajectory[k].pos);
            positions.push_back({l.x, l.y});
        }
        entry.grid = build_grid(entry.region.footprint(), positions, cell_size);
        ov.entries.push_back(std::move(entry));
    }
    return ov;
}

double ov_total_volume(const OperationalVolume& ov) {
    std::vector<geom::Rect> rects;
    rects.reserve(ov.entries.size());
    for (const auto& e : ov.entries) rects.push_back(e.region.footprint());
    return geom::union_area(rects) / 1e6;
}

double probability(const OperationalVolume& ov, const geo::LocalPoint& s, double t) {
    if (ov.entries.empty()) throw RangeError("volume has no entries");
    if (t < ov.t0 - kTimeTol || t > ov.t0 + ov.t_d + kTimeTol) {
        throw RangeError("query time outside the volume's window");
    }
    return ov.entries[entry_index(ov, t)].grid.probability({s.x, s.y});
}

bool ov_contains(const OperationalVolume& ov, const geo::LocalPoint& p, double t) {
    if (ov.entries.empty()) return false;
    if (t < ov.t0 || t > ov.t0 + ov.t_d) return false;
    return ov.entries[entry_index(ov, t)].region.contains(p.x, p.y, p.z);
}

bool contract_contains(const Contract& c, const geo::LocalPoint& p, double t) {
    for (const auto& ov : c.ovs) {
        if (ov_contains(ov, p, t)) return true;
    }
    return false;
}

bool ov_intersects_nfz(const OperationalVolume& ov, const NoFlyZone& nfz) {
    for (const auto& e : ov.entries) {
        if (e.region.lo[2] > nfz.alt_range[1] || e.region.hi[2] < nfz.alt_range[0]) continue;
        if (geom::rect_intersects_polygon(e.region.footprint(), nfz.polygon)) return true;
    }
    return false;
}

std::vector<std::string> validate_contract(const Contract& c) {
    std::vector<std::string> violations;
    auto report = [&](std::size_t i, const std::string& what) {
        std::ostringstream os;
        os << "ov " << i << ": " << what;
        violations.push_back(os.str());
    };

    for (std::size_t i = 0; i < c.ovs.size(); ++i) {
        const auto& ov = c.ovs[i];
        if (ov.entries.empty()) {
            report(i, "no entries");
            continue;
        }
        if (std::abs(ov.t_d - (static_cast<double>(ov.entries.size()) - 1.0)) > kTimeTol) {
            report(i, "duration does not match the entry count");
        }
        if (!(ov.delta >= 0.0 && ov.delta < ov.t_d)) {
            report(i, "delta outside [0, t_d)");
        }
        for (std::size_t k = 0; k < ov.entries.size(); ++k) {
            const auto& e = ov.entries[k];
            if (std::abs(e.t - (ov.t0 + static_cast<double>(k))) > kTimeTol) {
                report(i, "entry times are not at 1 s spacing from t0");
                break;
            }
        }
        for (std::size_t k = 0; k < ov.entries.size(); ++k) {
            const auto& e = ov.entries[k];
            for (int a = 0; a < 3; ++a) {
                if (e.region.lo[static_cast<std::size_t>(a)] >
                    e.region.hi[static_cast<std::size_t>(a)]) {
                    report(i, "inverted region box");
                    a = 3;
                    k = ov.entries.size() - 1;
                }
            }
        }
        for (std::size_t k = 0; k < ov.entries.size(); ++k) {
            const auto& g = ov.entries[k].grid;
            if (g.counts.size() !=
                static_cast<std::size_t>(g.cols) * static_cast<std::size_t>(g.rows)) {
                report(i, "grid shape does not match its count array");
                break;
            }
            long long sum = 0;
            for (int v : g.counts) {
                if (v < 0) {
                    report(i, "negative occupancy count");
                    break;
                }
                sum += v;
            }
            if (sum != g.n_total) {
                report(i, "occupancy counts do not sum to the batch size");
                break;
            }
            const geom::Rect cover = g.extent();
            const geom::Rect fp = ov.entries[k].region.footprint();
            if (cover.lo.x > fp.lo.x + kTimeTol || cover.lo.y > fp.lo.y + kTimeTol ||
                cover.hi.x < fp.hi.x - kTimeTol || cover.hi.y < fp.hi.y - kTimeTol) {
                report(i, "grid does not cover its region");
                break;
            }
        }
    }

    for (std::size_t i = 1; i < c.ovs.size(); ++i) {
        if (std::abs(c.ovs[i].t_d - c.ovs[0].t_d) > kTimeTol) {
            report(i, "duration differs from the first volume");
        }
        if (std::abs(c.ovs[i].delta - c.ovs[0].delta) > kTimeTol) {
            report(i, "offset differs from the first volume");
        }
        const double expected = c.ovs[i - 1].t0 + (c.ovs[i - 1].t_d - c.ovs[i - 1].delta);
        if (std::abs(c.ovs[i].t0 - expected) > kTimeTol) {
            report(i, "start time breaks the offset chain");
        }
    }
    return violations;
}

nlohmann::json contract_to_json(const Contract& c) {
    nlohmann::json j;
    j["route_id"] = c.route_id;
    j["aircraft_id"] = c.aircraft_id;
    j["t_d"] = c.ovs.empty() ? 0.0 : c.ovs[0].t_d;
    j["delta"] = c.ovs.empty() ? 0.0 : c.ovs[0].delta;
    j["ovs"] = nlohmann::json::array();
    for (const auto& ov : c.ovs) {
        nlohmann::json jov;
        jov["t0"] = ov.t0;
        jov["entries"] = nlohmann::json::array();
        for (const auto& e : ov.entries) {
            nlohmann::json je;
            je["t"] = e.t;
            je["box"] = {e.region.lo[0], e.region.lo[1], e.region.lo[2],
                         e.region.hi[0], e.region.hi[1], e.region.hi[2]};
            je["grid"] = {{"origin", {e.grid.origin.x, e.grid.origin.y}},
                          {"cell_size", e.grid.cell_size},
                          {"cols", e.grid.cols},
                          {"rows", e.grid.rows},
                          {"n_total", e.grid.n_total},
                          {"counts", e.grid.counts}};
            jov["entries"].push_back(std::move(je));
        }
        j["ovs"].push_back(std::move(jov));
    }
    return j;
}

Contract contract_from_json(const nlohmann::json& j) {
    Contract c;
    c.route_id = j.at("route_id").get<std::string>();
    c.aircraft_id = j.at("aircraft_id").get<std::string>();
    const double t_d = j.at("t_d").get<double>();
    const double delta = j.at("delta").get<double>();
    for (const auto& jov : j.at("ovs")) {
        OperationalVolume ov;
        ov.t0 = jov.at("t0").get<double>();
        ov.t_d = t_d;
        ov.delta = delta;
        for (const auto& je : jov.at("entries")) {
            OvEntry e;
            e.t = je.at("t").get<double>();
            const auto& box = je.at("box");
            if (box.size() != 6) throw ConfigError("entry box must have 6 numbers");
            e.region.lo = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>()};
            e.region.hi = {box[3].get<double>(), box[4].get<double>(), box[5].get<double>()};
            const auto& jg = je.at("grid");
            e.grid.origin = {jg.at("origin")[0].get<double>(), jg.at("origin")[1].get<double>()};
            e.grid.cell_size = jg.at("cell_size").get<double>();
            e.grid.cols = jg.at("cols").get<int>();
            e.grid.rows = jg.at("rows").get<int>();
            e.grid.n_total = jg.at("n_total").get<int>();
            e.grid.counts = jg.at("counts").get<std::vector<int>>();
            if (e.grid.counts.size() != static_cast<std::size_t>(e.grid.cols) *
                                            static_cast<std::size_t>(e.grid.rows)) {
                throw ConfigError("grid counts do not match cols * rows");
            }
            ov.entries.push_back(std::move(e));
        }
        c.ovs.push_back(std::move(ov));
    }
    return c;
}

nlohmann::json contract_footprints_geojson(const Contract& c, const geo::Projection& proj) {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t i = 0; i < c.ovs.size(); ++i) {
        for (const auto& e : c.ovs[i].entries) {
            const geom::Rect fp = e.region.footprint();
            auto to_lonlat = [&](double x, double y) {
                const geo::GeoPoint g = proj.to_geo({x, y, 0.0});
                return nlohmann::json::array({g.lon, g.lat});
            };
            nlohmann::json ring = nlohmann::json::array();
            ring.push_back(to_lonlat(fp.lo.x, fp.lo.y));
            ring.push_back(to_lonlat(fp.hi.x, fp.lo.y));
            ring.push_back(to_lonlat(fp.hi.x, fp.hi.y));
            ring.push_back(to_lonlat(fp.lo.x, fp.hi.y));
            ring.push_back(to_lonlat(fp.lo.x, fp.lo.y));

            nlohmann::json feature;
            feature["type"] = "Feature";
            feature["geometry"] = {{"type", "Polygon"},
                                   {"coordinates", nlohmann::json::array({ring})}};
            feature["properties"] = {{"t", e.t}, {"ov_index", i}};
            features.push_back(std::move(feature));
        }
    }
    return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace airlane::ov
