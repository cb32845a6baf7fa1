#include "airlane/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include "airlane/errors.hpp"

namespace airlane::scn {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& ctx, const std::string& what) {
    throw ConfigError("scenario: " + ctx + ": " + what);
}

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(ctx, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) fail(ctx, "unknown field '" + key + "'");
    }
}

double get_num(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key)) fail(ctx, std::string("missing field '") + key + "'");
    if (!j.at(key).is_number()) fail(ctx, std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

void opt_num(const json& j, const char* key, const std::string& ctx, double& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) fail(ctx, std::string("field '") + key + "' must be a number");
    out = j.at(key).get<double>();
}

void opt_range(const json& j, const char* key, const std::string& ctx,
               std::array<double, 2>& out) {
    if (!j.contains(key)) return;
    const json& a = j.at(key);
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        fail(ctx, std::string("field '") + key + "' must be [lo, hi]");
    }
    out = {a[0].get<double>(), a[1].get<double>()};
}

geo::GeoPoint parse_geopoint(const json& j, const std::string& ctx) {
    check_keys(j, ctx, {"lat", "lon", "alt"});
    geo::GeoPoint p;
    p.lat = get_num(j, "lat", ctx);
    p.lon = get_num(j, "lon", ctx);
    p.alt = j.contains("alt") ? get_num(j, "alt", ctx) : 0.0;
    return p;
}

void parse_aircraft(const json& j, sim::AircraftModel& m) {
    const std::string ctx = "aircraft";
    check_keys(j, ctx,
               {"cruise_tas", "tas_min", "tas_max", "max_accel", "max_turn_rate", "max_climb",
                "max_descent", "waypoint_capture_radius"});
    opt_num(j, "cruise_tas", ctx, m.cruise_tas);
    opt_num(j, "tas_min", ctx, m.tas_min);
    opt_num(j, "tas_max", ctx, m.tas_max);
    opt_num(j, "max_accel", ctx, m.max_accel);
    opt_num(j, "max_turn_rate", ctx, m.max_turn_rate);
    opt_num(j, "max_climb", ctx, m.max_climb);
    opt_num(j, "max_descent", ctx, m.max_descent);
    opt_num(j, "waypoint_capture_radius", ctx, m.waypoint_capture_radius);
}

void parse_uncertainty(const json& j, sim::UncertaintyConfig& u) {
    const std::string ctx = "uncertainty";
    check_keys(j, ctx,
               {"pos_jitter", "alt_range", "speed_range", "heading_jitter", "log_noise_pos",
                "log_noise_alt", "resample_window_c"});
    opt_num(j, "pos_jitter", ctx, u.pos_jitter);
    opt_range(j, "alt_range", ctx, u.alt_range);
    opt_range(j, "speed_range", ctx, u.speed_range);
    opt_num(j, "heading_jitter", ctx, u.heading_jitter);
    opt_num(j, "log_noise_pos", ctx, u.log_noise_pos);
    opt_num(j, "log_noise_alt", ctx, u.log_noise_alt);
    opt_num(j, "resample_window_c", ctx, u.resample_window_c);
}

void parse_pipeline(const json& j, pipe::PipelineConfig& c) {
    const std::string ctx = "pipeline";
    check_keys(j, ctx,
               {"t_d", "delta", "n_aircraft", "verification_threshold", "conflict_threshold",
                "cell_size", "step", "max_nodes", "max_repair_rounds", "iteration_budget",
                "opt_factor", "training_count", "resample_margin", "max_horizons"});
    opt_num(j, "t_d", ctx, c.t_d);
    opt_num(j, "delta", ctx, c.delta);
    if (j.contains("n_aircraft")) {
        c.n_aircraft = static_cast<int>(get_num(j, "n_aircraft", ctx));
    }
    opt_num(j, "verification_threshold", ctx, c.verification_threshold);
    opt_num(j, "conflict_threshold", ctx, c.conflict_threshold);
    opt_num(j, "cell_size", ctx, c.cell_size);
    opt_num(j, "step", ctx, c.step);
    if (j.contains("max_nodes")) c.max_nodes = static_cast<std::size_t>(get_num(j, "max_nodes", ctx));
    if (j.contains("max_repair_rounds")) {
        c.max_repair_rounds = static_cast<int>(get_num(j, "max_repair_rounds", ctx));
    }
    if (j.contains("iteration_budget")) {
        c.iteration_budget = static_cast<std::size_t>(get_num(j, "iteration_budget", ctx));
    }
    if (j.contains("opt_factor")) {
        c.opt_factor = static_cast<std::size_t>(get_num(j, "opt_factor", ctx));
    }
    if (j.contains("training_count")) {
        c.training_count = static_cast<std::size_t>(get_num(j, "training_count", ctx));
    }
    opt_num(j, "resample_margin", ctx, c.resample_margin);
    if (j.contains("max_horizons")) {
        c.max_horizons = static_cast<int>(get_num(j, "max_horizons", ctx));
    }
}

Route parse_route(const json& j, const geo::Projection& proj) {
    const std::string ctx = "route";
    check_keys(j, ctx, {"waypoints", "departure_time"});
    Route r;
    if (j.contains("departure_time")) r.departure_time = get_num(j, "departure_time", ctx);
    if (!j.contains("waypoints") || !j.at("waypoints").is_array()) {
        fail(ctx, "missing 'waypoints' array");
    }
    for (const json& w : j.at("waypoints")) {
        const std::string wctx = ctx + ".waypoints";
        check_keys(w, wctx, {"lat", "lon", "alt", "tas"});
        geo::GeoPoint g;
        g.lat = get_num(w, "lat", wctx);
        g.lon = get_num(w, "lon", wctx);
        g.alt = w.contains("alt") ? get_num(w, "alt", wctx) : 0.0;
        Waypoint wp;
        wp.pos = proj.to_local(g);
        if (w.contains("tas")) wp.tas = get_num(w, "tas", wctx);
        r.waypoints.push_back(wp);
    }
    if (r.waypoints.size() < 2) fail(ctx, "needs at least two waypoints");
    return r;
}

std::vector<ov::NoFlyZone> parse_nfzs(const json& j, const geo::Projection& proj) {
    std::vector<ov::NoFlyZone> out;
    if (!j.is_array()) fail("nfzs", "expected an array");
    std::size_t idx = 0;
    for (const json& z : j) {
        const std::string ctx = "nfzs[" + std::to_string(idx) + "]";
        check_keys(z, ctx, {"id", "vertices", "alt_range"});
        ov::NoFlyZone nfz;
        nfz.id = z.contains("id") ? z.at("id").get<std::string>() : "nfz-" + std::to_string(idx);
        if (!z.contains("vertices") || !z.at("vertices").is_array()) {
            fail(ctx, "missing 'vertices' array");
        }
        for (const json& v : z.at("vertices")) {
            check_keys(v, ctx + ".vertices", {"lat", "lon"});
            geo::GeoPoint g;
            g.lat = get_num(v, "lat", ctx);
            g.lon = get_num(v, "lon", ctx);
            const geo::LocalPoint l = proj.to_local(g);
            nfz.polygon.push_back({l.x, l.y});
        }
        if (nfz.polygon.size() < 3) fail(ctx, "polygon needs at least 3 vertices");
        if (!geom::polygon_is_simple(nfz.polygon)) fail(ctx, "polygon is self-intersecting");
        opt_range(z, "alt_range", ctx, nfz.alt_range);
        out.push_back(std::move(nfz));
        ++idx;
    }
    return out;
}

}  // namespace

geo::Projection projection(const Scenario& s) { return geo::Projection::at(s.origin); }

plan::Environment environment(const Scenario& s) {
    plan::Environment env;
    env.bounds = s.bounds;
    env.nfzs = s.nfzs;

    const geo::Projection proj = projection(s);
    const geo::LocalPoint o = proj.to_local(s.origin);
    const geo::LocalPoint d = proj.to_local(s.destination);
    if (!env.point_free({o.x, o.y})) {
        throw ConfigError("scenario: origin is out of bounds or inside a no-fly zone");
    }
    if (!env.point_free({d.x, d.y})) {
        throw ConfigError("scenario: destination is out of bounds or inside a no-fly zone");
    }

    for (const auto& c : s.foreign) {
        for (const auto& vol : c.ovs) {
            for (const auto& e : vol.entries) {
                env.dynamic_obstacles.push_back(
                    {e.region.footprint(), e.t, std::min(e.t + 1.0, vol.t0 + vol.t_d)});
            }
        }
    }
    return env;
}

Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir) {
    check_keys(j, "scenario",
               {"name", "origin", "destination", "bounds", "route", "nfzs",
                "foreign_contracts", "aircraft", "uncertainty", "pipeline", "seed"});

    Scenario s;
    s.name = j.contains("name") ? j.at("name").get<std::string>() : "unnamed";
    if (!j.contains("origin")) fail("scenario", "missing 'origin'");
    if (!j.contains("destination")) fail("scenario", "missing 'destination'");
    s.origin = parse_geopoint(j.at("origin"), "origin");
    s.destination = parse_geopoint(j.at("destination"), "destination");

    const geo::Projection proj = geo::Projection::at(s.origin);

    if (!j.contains("bounds")) fail("scenario", "missing 'bounds'");
    {
        const json& b = j.at("bounds");
        check_keys(b, "bounds", {"x0", "y0", "x1", "y1"});
        s.bounds = {{get_num(b, "x0", "bounds"), get_num(b, "y0", "bounds")},
                    {get_num(b, "x1", "bounds"), get_num(b, "y1", "bounds")}};
        if (s.bounds.width() <= 0.0 || s.bounds.height() <= 0.0) {
            fail("bounds", "must have positive extent");
        }
    }

    if (j.contains("route")) s.route = parse_route(j.at("route"), proj);
    if (j.contains("nfzs")) s.nfzs = parse_nfzs(j.at("nfzs"), proj);

    if (j.contains("foreign_contracts")) {
        const json& refs = j.at("foreign_contracts");
        if (!refs.is_array()) fail("foreign_contracts", "expected an array of paths");
        for (const json& ref : refs) {
            if (!ref.is_string()) fail("foreign_contracts", "entries must be path strings");
            const std::filesystem::path p =
                std::filesystem::path(base_dir) / ref.get<std::string>();
            std::ifstream in(p);
            if (!in) fail("foreign_contracts", "cannot open '" + p.string() + "'");
            json cj;
            try {
                in >> cj;
            } catch (const json::exception& e) {
                fail("foreign_contracts", p.string() + ": " + e.what());
            }
            s.foreign.push_back(ov::contract_from_json(cj));
        }
    }

    if (j.contains("aircraft")) parse_aircraft(j.at("aircraft"), s.aircraft);
    if (j.contains("uncertainty")) parse_uncertainty(j.at("uncertainty"), s.uncertainty);
    if (j.contains("pipeline")) parse_pipeline(j.at("pipeline"), s.pipeline);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
            fail("seed", "must be an integer");
        }
        s.pipeline.seed = j.at("seed").get<std::uint64_t>();
    }
    s.uncertainty.seed = s.pipeline.seed;

    s.aircraft.validate();
    s.uncertainty.validate();
    s.pipeline.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario: " + path + ": " + e.what());
    }
    return scenario_from_json(j, std::filesystem::path(path).parent_path().string());
}

}  // namespace airlane::scn
