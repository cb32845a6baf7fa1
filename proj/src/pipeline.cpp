#include "airlane/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "airlane/errors.hpp"
#include "airlane/scenario.hpp"

namespace airlane::pipe {

namespace {

constexpr double kTerminalQuorum = 0.5;  // batch fraction that must have arrived

double initial_leg_heading(const Route& route) {
    const auto& a = route.waypoints.front().pos;
    const auto& b = route.waypoints[1].pos;
    return sim::normalize_heading(std::atan2(b.x - a.x, b.y - a.y) * 180.0 / M_PI);
}

std::vector<reach::NormTraj> normalize_batch(const sim::TrajectorySet& batch,
                                             geo::NormalizationBox& nbox) {
    std::vector<std::array<double, 3>> samples;
    samples.reserve(batch.size() * (batch.duration + 1));
    for (const auto& traj : batch.trajectories) {
        for (const auto& s : traj) samples.push_back({s.pos.lat, s.pos.lon, s.pos.alt});
    }
    nbox = geo::NormalizationBox::of_points(samples);

    std::vector<reach::NormTraj> out;
    out.reserve(batch.size());
    for (const auto& traj : batch.trajectories) {
        reach::NormTraj nt;
        nt.reserve(traj.size());
        for (const auto& s : traj) nt.push_back(nbox.normalize({s.pos.lat, s.pos.lon, s.pos.alt}));
        out.push_back(std::move(nt));
    }
    return out;
}

/// Meter-space deviation floors: never below the logging noise, never below
/// one meter.
std::array<double, 3> floor_meters(const sim::UncertaintyConfig& unc) {
    const double pos = std::max(1.0, unc.log_noise_pos);
    const double alt = std::max(1.0, unc.log_noise_alt);
    return {pos, pos, alt};  // lat, lon, alt axis order
}

std::array<double, 3> floor_normalized(const std::array<double, 3>& floor_m,
                                       const geo::NormalizationBox& nbox,
                                       const geo::Projection& proj) {
    const std::array<double, 3> meters_per_unit = {nbox.extent(0) * proj.m_per_deg_lat,
                                                   nbox.extent(1) * proj.m_per_deg_lon,
                                                   nbox.extent(2)};
    std::array<double, 3> out{};
    for (int a = 0; a < 3; ++a) {
        out[a] = meters_per_unit[a] > 0.0 ? floor_m[a] / meters_per_unit[a] : 0.0;
    }
    return out;
}

bool terminal_quorum_reached(const sim::TrajectorySet& batch, const Route& route,
                             const sim::AircraftModel& model, const geo::Projection& proj) {
    const auto& goal = route.waypoints.back().pos;
    std::size_t arrived = 0;
    for (const auto& traj : batch.trajectories) {
        const geo::LocalPoint p = proj.to_local(traj.back().pos);
        if (std::hypot(goal.x - p.x, goal.y - p.y) <= model.waypoint_capture_radius) ++arrived;
    }
    return arrived * 2 >= batch.size();
}

std::size_t effective_opt_factor(const PipelineConfig& cfg, const Route& route) {
    return cfg.opt_factor == 0 ? route.waypoints.size() : cfg.opt_factor;
}

}  // namespace

void PipelineConfig::validate() const {
    if (!(t_d > 0.0)) throw ConfigError("pipeline: t_d must be positive");
    if (delta < 0.0 || delta >= t_d) throw ConfigError("pipeline: need 0 <= delta < t_d");
    if (n_aircraft < 20) throw ConfigError("pipeline: n_aircraft must be at least 20");
    if (static_cast<std::size_t>(n_aircraft) < training_count + 2) {
        throw ConfigError("pipeline: n_aircraft too small for the training subset plus holdout");
    }
    if (verification_threshold <= 0.0 || verification_threshold > 1.0) {
        throw ConfigError("pipeline: verification_threshold must be in (0, 1]");
    }
    if (conflict_threshold < 0.0 || conflict_threshold > 1.0) {
        throw ConfigError("pipeline: conflict_threshold must be in [0, 1]");
    }
    if (cell_size <= 0.0) throw ConfigError("pipeline: cell_size must be positive");
    if (step <= 0.0) throw ConfigError("pipeline: step must be positive");
    if (max_nodes == 0) throw ConfigError("pipeline: max_nodes must be positive");
    if (max_repair_rounds < 0) throw ConfigError("pipeline: max_repair_rounds must be >= 0");
    if (training_count < 1) throw ConfigError("pipeline: training_count must be positive");
    if (resample_margin < 0.0) throw ConfigError("pipeline: resample_margin must be >= 0");
    if (max_horizons < 1) throw ConfigError("pipeline: max_horizons must be positive");
    if (std::fmod(t_d, 1.0) != 0.0 || std::fmod(delta, 1.0) != 0.0) {
        throw ConfigError("pipeline: t_d and delta must be whole seconds");
    }
}

Route finalize_route(Route route, const scn::Scenario& scenario) {
    const double cruise_alt =
        (scenario.uncertainty.alt_range[0] + scenario.uncertainty.alt_range[1]) / 2.0;
    for (auto& wp : route.waypoints) {
        if (wp.pos.z == 0.0) wp.pos.z = cruise_alt;
    }
    route.speed_min = scenario.uncertainty.speed_range[0];
    route.speed_max = scenario.uncertainty.speed_range[1];
    return route;
}

void extend_contract(ContractResult& state, std::size_t from_horizon, const Route& route,
                     const scn::Scenario& scenario, const PipelineConfig& cfg) {
    cfg.validate();
    if (route.waypoints.size() < 2) throw ConfigError("pipeline: route needs two waypoints");
    if (from_horizon > state.batches.size()) {
        throw ConfigError("pipeline: cannot resume past the existing horizons");
    }

    state.contract.ovs.resize(std::min(state.contract.ovs.size(), from_horizon));
    state.verification.resize(std::min(state.verification.size(), from_horizon));
    state.batches.resize(std::min(state.batches.size(), from_horizon));
    state.ok = false;
    state.failure_reason.clear();

    const geo::Projection proj = scn::projection(scenario);
    sim::UncertaintyConfig unc = scenario.uncertainty;
    unc.seed = cfg.seed;
    const int duration = static_cast<int>(cfg.t_d);
    const double offset = cfg.t_d - cfg.delta;
    const std::array<double, 3> floor_m = floor_meters(unc);

    // Check whether the kept prefix already reached the terminal quorum.
    if (!state.batches.empty() &&
        terminal_quorum_reached(state.batches.back(), route, scenario.aircraft, proj)) {
        state.ok = true;
        return;
    }

    for (int i = static_cast<int>(from_horizon); i < cfg.max_horizons; ++i) {
        const double t0_i = route.departure_time + i * offset;
        std::vector<sim::State> states;
        try {
            if (i == 0) {
                const geo::GeoPoint start = proj.to_geo(route.waypoints.front().pos);
                const double heading = initial_leg_heading(route);
                states = sim::init_states_uniform(start, heading, unc, cfg.n_aircraft, proj,
                                                  t0_i, static_cast<std::uint64_t>(i));
                states[0] = sim::nominal_state_uniform(start, heading, unc, t0_i);
            } else {
                const sim::TrajectorySet& prev = state.batches.back();
                const sim::StateDistribution dist =
                    sim::fit_state_distribution(prev, offset, unc, proj);
                const auto entry_idx = static_cast<std::size_t>(offset);
                sim::ResampleBounds rb{
                    state.contract.ovs.back().entries.at(entry_idx).region,
                    cfg.resample_margin};
                states = sim::init_states_from_batch(prev, offset, unc, rb, cfg.n_aircraft,
                                                     proj, static_cast<std::uint64_t>(i));
                states[0] = dist.mean_state(proj);
            }
        } catch (const InfeasibleResample&) {
            state.failure_reason = "resample";
            return;
        }

        const sim::TrajectorySet batch = sim::run_batch(states, route, scenario.aircraft, unc,
                                                        duration, proj,
                                                        static_cast<std::uint64_t>(i));

        geo::NormalizationBox nbox;
        const std::vector<reach::NormTraj> norm = normalize_batch(batch, nbox);
        const std::array<double, 3> floor_n = floor_normalized(floor_m, nbox, proj);

        const std::size_t want = std::min(cfg.training_count, norm.size() - 1);
        const std::vector<std::size_t> training_idx =
            reach::select_training(norm, batch.center_index, want);
        std::vector<reach::NormTraj> training;
        training.reserve(training_idx.size());
        std::set<std::size_t> used(training_idx.begin(), training_idx.end());
        used.insert(batch.center_index);
        for (std::size_t idx : training_idx) training.push_back(norm[idx]);

        const reach::DiscrepancyModel model =
            reach::learn_discrepancy(norm[batch.center_index], training, floor_n);
        const reach::ReachTube tube =
            reach::compute_reach_tube(norm[batch.center_index], model, t0_i, floor_n);

        std::vector<reach::NormTraj> holdout;
        holdout.reserve(norm.size() - used.size());
        for (std::size_t idx = 0; idx < norm.size(); ++idx) {
            if (!used.count(idx)) holdout.push_back(norm[idx]);
        }
        const reach::VerificationReport report = reach::verify_tube(tube, holdout);
        state.verification.push_back(report);
        if (!report.pass(cfg.verification_threshold)) {
            state.failure_reason = "verification";
            return;
        }

        const reach::ReachTube local_tube = reach::tube_to_local(tube, nbox, proj, floor_m);
        state.contract.ovs.push_back(
            ov::build_ov(local_tube, batch, proj, cfg.delta, cfg.cell_size));
        state.batches.push_back(batch);

        if (terminal_quorum_reached(batch, route, scenario.aircraft, proj)) {
            state.ok = true;
            return;
        }
    }
    state.failure_reason = "horizon-overrun";
}

ContractResult generate_contract(const Route& route, const scn::Scenario& scenario,
                                 const PipelineConfig& cfg) {
    ContractResult state;
    state.contract.route_id = scenario.name + "-route";
    state.contract.aircraft_id = scenario.name + "-aircraft";
    extend_contract(state, 0, route, scenario, cfg);
    return state;
}

std::size_t first_affected_horizon(const Route& old_route, const Route& new_route,
                                   const scn::Scenario& scenario, const PipelineConfig& cfg) {
    const auto& ow = old_route.waypoints;
    const auto& nw = new_route.waypoints;
    std::size_t k = 0;
    while (k < ow.size() && k < nw.size() && ow[k].pos.x == nw[k].pos.x &&
           ow[k].pos.y == nw[k].pos.y) {
        ++k;
    }
    if (k == ow.size() && k == nw.size()) return std::numeric_limits<std::size_t>::max();

    double d_prefix = 0.0;
    for (std::size_t i = 1; i < k; ++i) {
        d_prefix += std::hypot(ow[i].pos.x - ow[i - 1].pos.x, ow[i].pos.y - ow[i - 1].pos.y);
    }
    // Corner cutting can shorten the flown path by up to the capture radius
    // per passed waypoint.
    d_prefix = std::max(0.0, d_prefix - scenario.aircraft.waypoint_capture_radius *
                                            static_cast<double>(k));
    const double vmax = std::max(new_route.speed_max, scenario.aircraft.tas_max);
    const double t_reach = old_route.departure_time + d_prefix / vmax;

    // Horizon i spans [t0_i, t0_i + t_d]; it is unaffected when it closes
    // before any aircraft could reach the change.
    const double spacing = cfg.t_d - cfg.delta;
    const double raw = (t_reach - old_route.departure_time - cfg.t_d) / spacing;
    if (raw <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

PlanResult plan_and_contract(const scn::Scenario& scenario, const PipelineConfig& cfg) {
    cfg.validate();
    PlanResult res;

    plan::Environment env = scn::environment(scenario);
    const geo::Projection proj = scn::projection(scenario);
    const geo::LocalPoint o = proj.to_local(scenario.origin);
    const geo::LocalPoint g = proj.to_local(scenario.destination);

    plan::PlanOutcome outcome =
        plan::plan_candidate(env, {o.x, o.y}, {g.x, g.y}, cfg.step, cfg.max_nodes,
                             cfg.iteration_budget, cfg.seed);
    res.telemetry.push_back({{"event", "plan"},
                             {"iterations", outcome.iterations},
                             {"success", outcome.success}});
    if (!outcome.success) {
        res.reason = "timeout";
        return res;
    }
    plan::PlanTree tree = std::move(outcome.tree);

    Route route = finalize_route(
        plan::rope_optimize(outcome.route, env, effective_opt_factor(cfg, outcome.route)),
        scenario);

    ContractResult state;
    state.contract.route_id = scenario.name + "-route";
    state.contract.aircraft_id = scenario.name + "-aircraft";
    bool have_contract = false;
    Route built_route;

    const auto apply_repair = [&](const plan::Conflict& conflict,
                                  const char* event) -> bool {
        if (res.repairs >= cfg.max_repair_rounds) {
            res.reason = "timeout";
            return false;
        }
        const plan::RepairResult rr = plan::sever_and_repair(tree, conflict, env, cfg.step);
        ++res.repairs;
        res.telemetry.push_back({{"event", event}, {"success", rr.success}});
        if (!rr.success) {
            res.reason = "timeout";
            return false;
        }
        Route repaired = finalize_route(
            plan::rope_optimize(rr.route, env, effective_opt_factor(cfg, rr.route)), scenario);
        repaired.departure_time = route.departure_time;
        route = repaired;
        return true;
    };

    while (true) {
        const auto timed = plan::estimate_timed_route(route);
        const auto conflicts =
            plan::find_conflicts(timed, scenario.foreign, cfg.conflict_threshold);
        if (!conflicts.empty()) {
            res.telemetry.push_back({{"event", "conflicts"}, {"count", conflicts.size()}});
            if (!apply_repair(conflicts[0], "repair-conflict")) return res;
            continue;
        }

        if (!have_contract || built_route.waypoints.size() != route.waypoints.size() ||
            !std::equal(built_route.waypoints.begin(), built_route.waypoints.end(),
                        route.waypoints.begin(), [](const Waypoint& a, const Waypoint& b) {
                            return a.pos.x == b.pos.x && a.pos.y == b.pos.y;
                        })) {
            const std::size_t from =
                have_contract ? std::min(first_affected_horizon(built_route, route, scenario,
                                                                cfg),
                                         state.batches.size())
                              : 0;
            extend_contract(state, from, route, scenario, cfg);
            res.telemetry.push_back({{"event", "contract"},
                                     {"from_horizon", from},
                                     {"horizons", state.contract.ovs.size()},
                                     {"ok", state.ok}});
            if (!state.ok) {
                res.reason = state.failure_reason;
                res.verification = state.verification;
                return res;
            }
            built_route = route;
            have_contract = true;
            continue;
        }

        // Volumes against static no-fly zones.
        const ov::NoFlyZone* hit_nfz = nullptr;
        const ov::OperationalVolume* hit_ov = nullptr;
        for (const auto& vol : state.contract.ovs) {
            for (const auto& nfz : scenario.nfzs) {
                if (ov::ov_intersects_nfz(vol, nfz)) {
                    hit_nfz = &nfz;
                    hit_ov = &vol;
                    break;
                }
            }
            if (hit_nfz) break;
        }
        if (!hit_nfz) break;

        // Clearance: block the zone's surroundings out to the widest
        // half-extent this volume reached, so the regenerated volumes fit.
        double rho = 0.0;
        for (const auto& e : hit_ov->entries) {
            rho = std::max({rho, e.region.extent(0) / 2.0, e.region.extent(1) / 2.0});
        }
        geom::Rect zone_box{{hit_nfz->polygon[0].x, hit_nfz->polygon[0].y},
                            {hit_nfz->polygon[0].x, hit_nfz->polygon[0].y}};
        for (const auto& v : hit_nfz->polygon) {
            zone_box.lo.x = std::min(zone_box.lo.x, v.x);
            zone_box.lo.y = std::min(zone_box.lo.y, v.y);
            zone_box.hi.x = std::max(zone_box.hi.x, v.x);
            zone_box.hi.y = std::max(zone_box.hi.y, v.y);
        }
        zone_box.lo.x -= rho;
        zone_box.lo.y -= rho;
        zone_box.hi.x += rho;
        zone_box.hi.y += rho;

        plan::Conflict nfz_conflict;
        nfz_conflict.ov_footprints = {zone_box};
        res.telemetry.push_back({{"event", "nfz-violation"},
                                 {"nfz", hit_nfz->id},
                                 {"clearance_m", rho}});
        if (!apply_repair(nfz_conflict, "repair-nfz")) return res;
    }

    res.status = PlanStatus::kAccepted;
    res.route = route;
    res.contract = state.contract;
    res.verification = state.verification;
    return res;
}

nlohmann::json result_manifest(const PlanResult& result, const scn::Scenario& scenario,
                               const PipelineConfig& cfg) {
    nlohmann::json cfg_echo = {
        {"t_d", cfg.t_d},
        {"delta", cfg.delta},
        {"n_aircraft", cfg.n_aircraft},
        {"verification_threshold", cfg.verification_threshold},
        {"conflict_threshold", cfg.conflict_threshold},
        {"cell_size", cfg.cell_size},
        {"step", cfg.step},
        {"max_nodes", cfg.max_nodes},
        {"max_repair_rounds", cfg.max_repair_rounds},
        {"iteration_budget", cfg.iteration_budget},
        {"opt_factor", cfg.opt_factor},
        {"training_count", cfg.training_count},
        {"resample_margin", cfg.resample_margin},
        {"max_horizons", cfg.max_horizons},
    };
    nlohmann::json verification = nlohmann::json::array();
    for (const auto& v : result.verification) {
        verification.push_back({{"total", v.total_points},
                                {"contained", v.contained_points},
                                {"ratio", v.ratio()}});
    }
    return {
        {"scenario", scenario.name},
        {"seed", cfg.seed},
        {"config", cfg_echo},
        {"status", result.accepted() ? "accepted" : "failed"},
        {"reason", result.reason},
        {"repairs", result.repairs},
        {"rounds", result.telemetry},
        {"verification", verification},
        {"route_length_m", result.route.length()},
        {"ov_count", result.contract.ovs.size()},
    };
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() /
                         (".tmp-" + target.filename().string());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw ConfigError("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

void export_plan_result(const PlanResult& result, const scn::Scenario& scenario,
                        const PipelineConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const geo::Projection proj = scn::projection(scenario);
    const fs::path dir(out_dir);
    atomic_write((dir / "route.geojson").string(),
                 plan::route_geojson(result.route, proj).dump(2) + "\n");
    atomic_write((dir / "contract.json").string(),
                 ov::contract_to_json(result.contract).dump(2) + "\n");
    atomic_write((dir / "manifest.json").string(),
                 result_manifest(result, scenario, cfg).dump(2) + "\n");
}

}  // namespace airlane::pipe
