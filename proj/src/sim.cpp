#include "airlane/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "airlane/errors.hpp"
#include "airlane/rng.hpp"

namespace airlane::sim {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kIntegrationDt = 0.1;
constexpr int kStepsPerLog = 10;
constexpr int kMaxRejections = 1000;

double gauss(std::mt19937_64& rng, double sigma) {
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> d(0.0, sigma);
    return d(rng);
}

/// Compass bearing from a to b in the local plane, degrees [0, 360).
double bearing_deg(const geo::LocalPoint& a, const geo::LocalPoint& b) {
    return normalize_heading(std::atan2(b.x - a.x, b.y - a.y) * kRadToDeg);
}

/// Speed at which the turn-rate-limited arc through an upcoming corner stays
/// within roughly twice the capture radius of the waypoint.
double turn_entry_tas(double turn_deg, const AircraftModel& model) {
    const double c = 1.0 - std::cos(std::abs(turn_deg) * kDegToRad);
    if (c < 1e-9) return model.tas_max;
    const double radius = 2.0 * model.waypoint_capture_radius / c;
    return std::clamp(radius * model.max_turn_rate * kDegToRad, model.tas_min, model.tas_max);
}

struct KinState {
    geo::LocalPoint pos;
    double heading;
    double vs;
    double tas;
};

/// Saturating controller step in local coordinates. Position advances along
/// the updated heading at the updated airspeed.
KinState kin_step(const KinState& s, const geo::LocalPoint& target, double target_tas,
                  const AircraftModel& model, double dt) {
    KinState out = s;

    const double desired = bearing_deg(s.pos, target);
    double diff = heading_diff(desired, s.heading);
    const double max_turn = model.max_turn_rate * dt;
    diff = std::clamp(diff, -max_turn, max_turn);
    out.heading = normalize_heading(s.heading + diff);

    const double tas_goal = std::clamp(target_tas, 0.0, model.tas_max);
    const double dv = std::clamp(tas_goal - s.tas, -model.max_accel * dt, model.max_accel * dt);
    out.tas = s.tas + dv;

    const double dz =
        std::clamp(target.z - s.pos.z, -model.max_descent * dt, model.max_climb * dt);
    out.vs = dz / dt;
    out.pos.z = s.pos.z + dz;

    const double hrad = out.heading * kDegToRad;
    out.pos.x = s.pos.x + std::sin(hrad) * out.tas * dt;
    out.pos.y = s.pos.y + std::cos(hrad) * out.tas * dt;
    return out;
}

}  // namespace

double normalize_heading(double deg) {
    double h = std::fmod(deg, 360.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h = 0.0;
    return h;
}

double heading_diff(double a_deg, double b_deg) {
    double d = std::fmod(a_deg - b_deg, 360.0);
    if (d > 180.0) d -= 360.0;
    if (d <= -180.0) d += 360.0;
    return d;
}

void AircraftModel::validate() const {
    if (!(tas_min <= cruise_tas && cruise_tas <= tas_max)) {
        throw ConfigError("aircraft model requires tas_min <= cruise_tas <= tas_max");
    }
    if (max_accel <= 0 || max_turn_rate <= 0 || max_climb <= 0 || max_descent <= 0 ||
        waypoint_capture_radius <= 0) {
        throw ConfigError("aircraft model rates and capture radius must be positive");
    }
}

void UncertaintyConfig::validate() const {
    if (alt_range[0] > alt_range[1] || speed_range[0] > speed_range[1]) {
        throw ConfigError("uncertainty ranges must be non-empty");
    }
    if (pos_jitter < 0 || heading_jitter < 0 || log_noise_pos < 0 || log_noise_alt < 0 ||
        resample_window_c < 0) {
        throw ConfigError("uncertainty magnitudes must be non-negative");
    }
}

std::vector<State> init_states_uniform(const geo::GeoPoint& route_origin,
                                       double initial_leg_heading_deg,
                                       const UncertaintyConfig& cfg, int n,
                                       const geo::Projection& proj, double t0,
                                       std::uint64_t salt) {
    cfg.validate();
    if (n < 2) throw ConfigError("init_states_uniform requires n >= 2");

    auto rng = derive_rng(cfg.seed, RngStream::kInitUniform, salt);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> alt_u(cfg.alt_range[0], cfg.alt_range[1]);
    std::uniform_real_distribution<double> spd_u(cfg.speed_range[0], cfg.speed_range[1]);

    const geo::LocalPoint origin_l = proj.to_local(route_origin);
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double theta = u01(rng) * 2.0 * std::numbers::pi;
        const double r = cfg.pos_jitter * std::sqrt(u01(rng));
        const double alt = alt_u(rng);
        const double hdg_off = cfg.heading_jitter > 0.0
                                   ? (u01(rng) * 2.0 - 1.0) * cfg.heading_jitter
                                   : 0.0;
        State s;
        s.t = t0;
        s.pos = proj.to_geo(
            {origin_l.x + r * std::cos(theta), origin_l.y + r * std::sin(theta), alt});
        s.heading = normalize_heading(initial_leg_heading_deg + hdg_off);
        s.vs = 0.0;
        s.tas = spd_u(rng);
        out.push_back(s);
    }
    return out;
}

State nominal_state_uniform(const geo::GeoPoint& route_origin, double initial_leg_heading_deg,
                            const UncertaintyConfig& cfg, double t0) {
    State s;
    s.t = t0;
    s.pos = route_origin;
    s.pos.alt = 0.5 * (cfg.alt_range[0] + cfg.alt_range[1]);
    s.heading = normalize_heading(initial_leg_heading_deg);
    s.vs = 0.0;
    s.tas = 0.5 * (cfg.speed_range[0] + cfg.speed_range[1]);
    return s;
}

StateDistribution fit_state_distribution(const TrajectorySet& prev, double offset_s,
                                         const UncertaintyConfig& cfg,
                                         const geo::Projection& proj) {
    if (offset_s + cfg.resample_window_c > prev.duration + 1e-9) {
        throw ConfigError("resample offset + window exceeds previous batch duration");
    }
    const double t_target = prev.t0 + offset_s;

    std::vector<std::array<double, 6>> samples;
    double sin_sum = 0.0;
    double cos_sum = 0.0;
    for (const auto& traj : prev.trajectories) {
        for (const auto& s : traj) {
            if (std::abs(s.t - t_target) <= cfg.resample_window_c + 1e-9) {
                const geo::LocalPoint l = proj.to_local(s.pos);
                samples.push_back({l.x, l.y, l.z, s.heading, s.vs, s.tas});
                sin_sum += std::sin(s.heading * kDegToRad);
                cos_sum += std::cos(s.heading * kDegToRad);
            }
        }
    }
    if (samples.empty()) throw ConfigError("no samples inside the resample window");

    StateDistribution dist;
    dist.t = t_target;
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    const double mean_heading = normalize_heading(std::atan2(sin_sum, cos_sum) * kRadToDeg);
    for (int f = 0; f < 6; ++f) {
        double mean = 0.0;
        if (f == 3) {
            mean = mean_heading;
        } else {
            for (const auto& s : samples) mean += s[f];
            mean *= inv_n;
        }
        double var = 0.0;
        for (const auto& s : samples) {
            const double d = (f == 3) ? heading_diff(s[f], mean) : s[f] - mean;
            var += d * d;
        }
        dist.mean[f] = mean;
        dist.sigma[f] = std::sqrt(var * inv_n);
    }
    return dist;
}

State StateDistribution::mean_state(const geo::Projection& proj) const {
    State s;
    s.t = t;
    s.pos = proj.to_geo({mean[0], mean[1], std::max(0.0, mean[2])});
    s.heading = normalize_heading(mean[3]);
    s.vs = mean[4];
    s.tas = std::max(0.0, mean[5]);
    return s;
}

std::vector<State> init_states_from_batch(const TrajectorySet& prev, double offset_s,
                                          const UncertaintyConfig& cfg,
                                          const ResampleBounds& bounds, int n,
                                          const geo::Projection& proj, std::uint64_t salt) {
    if (n < 1) throw ConfigError("init_states_from_batch requires n >= 1");
    const StateDistribution dist = fit_state_distribution(prev, offset_s, cfg, proj);

    geom::Box3 accept = bounds.region;
    if (std::isfinite(bounds.margin)) {
        accept.inflate({bounds.margin, bounds.margin, bounds.margin});
    }
    const bool unbounded = !std::isfinite(bounds.margin);

    auto rng = derive_rng(cfg.seed, RngStream::kResample, salt);
    std::vector<State> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;
        int rejections = 0;
        for (;;) {
            x = dist.mean[0] + gauss(rng, dist.sigma[0]);
            y = dist.mean[1] + gauss(rng, dist.sigma[1]);
            z = dist.mean[2] + gauss(rng, dist.sigma[2]);
            if (unbounded || accept.contains(x, y, z)) break;
            if (++rejections >= kMaxRejections) {
                throw InfeasibleResample(
                    "resampled positions kept falling outside the previous volume");
            }
        }
        State s;
        s.t = dist.t;
        s.pos = proj.to_geo({x, y, std::max(0.0, z)});
        s.heading = normalize_heading(dist.mean[3] + gauss(rng, dist.sigma[3]));
        s.vs = dist.mean[4] + gauss(rng, dist.sigma[4]);
        s.tas = std::max(0.0, dist.mean[5] + gauss(rng, dist.sigma[5]));
        out.push_back(s);
    }
    return out;
}

State step(const State& s, const geo::GeoPoint& target, const AircraftModel& model, double dt,
           const geo::Projection& proj) {
    if (dt <= 0.0) throw ConfigError("step requires dt > 0");
    KinState k{proj.to_local(s.pos), s.heading, s.vs, s.tas};
    const KinState next = kin_step(k, proj.to_local(target), model.cruise_tas, model, dt);
    State out;
    out.t = s.t + dt;
    out.pos = proj.to_geo(next.pos);
    out.heading = next.heading;
    out.vs = next.vs;
    out.tas = next.tas;
    return out;
}

std::size_t current_waypoint_index(const Route& route, const geo::LocalPoint& pos,
                                   double tie_slack) {
    const auto& wps = route.waypoints;
    if (wps.size() < 2) return 0;
    const geom::Vec2 p{pos.x, pos.y};
    std::vector<double> d(wps.size() - 1);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
        const geom::Vec2 a{wps[i].pos.x, wps[i].pos.y};
        const geom::Vec2 b{wps[i + 1].pos.x, wps[i + 1].pos.y};
        d[i] = geom::dist_point_segment(p, a, b);
        best = std::min(best, d[i]);
    }
    // Near-ties resolve to the latest leg: a craft swinging wide through a
    // corner must not be retargeted at the waypoint it already passed.
    std::size_t idx = 1;
    for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
        if (d[i] <= best + tie_slack) idx = i + 1;
    }
    return idx;
}

TrajectorySet run_batch(const std::vector<State>& states, const Route& route,
                        const AircraftModel& model, const UncertaintyConfig& cfg, int duration_s,
                        const geo::Projection& proj, std::uint64_t salt) {
    model.validate();
    cfg.validate();
    if (route.waypoints.empty()) throw ConfigError("run_batch requires a non-empty route");
    if (duration_s <= 0) throw ConfigError("run_batch requires duration > 0");
    if (states.size() < 2) throw ConfigError("run_batch requires at least 2 aircraft");

    TrajectorySet out;
    out.t0 = states[0].t;
    out.duration = duration_s;
    out.center_index = 0;
    out.trajectories.resize(states.size());

    const int total_steps = duration_s * kStepsPerLog;
    // Every craft starts the horizon chasing the same leg: a resampled
    // ensemble scattered around a corner must not fork between the passed
    // and the upcoming waypoint. Capture still advances each craft alone.
    const std::size_t wp0 = current_waypoint_index(route, proj.to_local(states[0].pos),
                                                   model.waypoint_capture_radius);
    const double setpoint = std::clamp(model.cruise_tas, model.tas_min, model.tas_max);
    for (std::size_t i = 0; i < states.size(); ++i) {
        auto noise_rng = derive_rng(cfg.seed, RngStream::kLogNoise, salt, i);

        KinState k{proj.to_local(states[i].pos), states[i].heading, states[i].vs, states[i].tas};
        std::size_t wp = wp0;

        Trajectory traj;
        traj.reserve(static_cast<std::size_t>(duration_s) + 1);
        auto log_state = [&](int log_second) {
            State s;
            s.t = out.t0 + log_second;
            s.pos = proj.to_geo({k.pos.x + gauss(noise_rng, cfg.log_noise_pos),
                                 k.pos.y + gauss(noise_rng, cfg.log_noise_pos),
                                 std::max(0.0, k.pos.z + gauss(noise_rng, cfg.log_noise_alt))});
            s.heading = k.heading;
            s.vs = k.vs;
            s.tas = k.tas;
            traj.push_back(s);
        };

        log_state(0);
        for (int stepi = 1; stepi <= total_steps; ++stepi) {
            const Waypoint& target = route.waypoints[wp];
            const bool last_wp = (wp + 1 == route.waypoints.size());
            const double dist_to_wp =
                std::hypot(target.pos.x - k.pos.x, target.pos.y - k.pos.y);

            double target_tas = target.tas.value_or(setpoint);
            // Brake toward the waypoint entry speed: zero at the terminal
            // one so the craft parks instead of orbiting it, the corner
            // speed elsewhere so a sharp turn does not swing the craft
            // hundreds of meters off the leg.
            double v_end = 0.0;
            if (!last_wp) {
                const double onward = bearing_deg(k.pos, route.waypoints[wp + 1].pos);
                v_end = turn_entry_tas(heading_diff(onward, k.heading), model);
            }
            // Corner speed must be reached by the capture boundary where the
            // turn begins. The terminal stop aims at half the capture radius:
            // deep enough inside the disk that a parked craft counts as
            // arrived, far enough from the point that the stop stays ahead of
            // the craft and it cannot overshoot into an orbit.
            const double run =
                dist_to_wp - (last_wp ? 0.5 : 1.0) * model.waypoint_capture_radius;
            target_tas = std::min(
                target_tas, run <= 0.0 ? v_end
                                       : std::sqrt(v_end * v_end +
                                                   2.0 * model.max_accel * run));
            k = kin_step(k, target.pos, target_tas, model, kIntegrationDt);

            if (!last_wp &&
                std::hypot(target.pos.x - k.pos.x, target.pos.y - k.pos.y) <=
                    model.waypoint_capture_radius) {
                ++wp;
            }
            if (stepi % kStepsPerLog == 0) log_state(stepi / kStepsPerLog);
        }
        out.trajectories[i] = std::move(traj);
    }
    return out;
}

void export_csv(const TrajectorySet& ts, std::ostream& os) {
    os << "traj_id,t,lat,lon,alt,heading,vs,tas\n";
    char buf[256];
    for (std::size_t i = 0; i < ts.trajectories.size(); ++i) {
        for (const State& s : ts.trajectories[i]) {
            std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", i, s.t,
                          s.pos.lat, s.pos.lon, s.pos.alt, s.heading, s.vs, s.tas);
            os << buf;
        }
    }
}

}  // namespace airlane::sim
