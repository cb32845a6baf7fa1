#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "airlane/geo.hpp"
#include "airlane/geometry.hpp"
#include "airlane/ovmodel.hpp"
#include "airlane/pipeline.hpp"
#include "airlane/planner.hpp"
#include "airlane/route.hpp"
#include "airlane/sim.hpp"

namespace airlane::scn {

/// Everything a run needs, loaded from one JSON file. The origin anchors the
/// local projection; bounds, zones, and routes are kept in local meters.
struct Scenario {
    std::string name;
    geo::GeoPoint origin;
    geo::GeoPoint destination;
    geom::Rect bounds;                  // local meters
    Route route;                        // optional fixture route; empty = plan one
    std::vector<ov::NoFlyZone> nfzs;    // local meters
    std::vector<ov::Contract> foreign;  // loaded from referenced contract files
    sim::AircraftModel aircraft;
    sim::UncertaintyConfig uncertainty;
    pipe::PipelineConfig pipeline;
};

geo::Projection projection(const Scenario& s);

/// Planning environment: bounds plus zones. Throws ConfigError when the
/// origin or destination is out of bounds or inside a zone.
plan::Environment environment(const Scenario& s);

/// Strict parse: unknown fields anywhere are rejected with the offending
/// key path in the error. Contract references resolve relative to base_dir.
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir);

Scenario load_scenario(const std::string& path);

}  // namespace airlane::scn
