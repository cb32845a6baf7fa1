#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "airlane/geo.hpp"
#include "airlane/geometry.hpp"
#include "airlane/route.hpp"

namespace airlane::sim {

/// One aircraft's kinematic record at an instant.
struct State {
    double t = 0.0;         // seconds since scenario epoch
    geo::GeoPoint pos;      // lat/lon/alt
    double heading = 0.0;   // degrees [0, 360), compass (0 = north, clockwise)
    double vs = 0.0;        // vertical speed, m/s
    double tas = 0.0;       // true airspeed, m/s
};

/// Point-mass performance limits with first-order saturating controllers.
struct AircraftModel {
    double cruise_tas = 22.0;              // m/s
    double tas_min = 10.0;                 // m/s
    double tas_max = 30.0;                 // m/s
    double max_accel = 1.0;                // m/s^2
    double max_turn_rate = 6.0;            // deg/s
    double max_climb = 3.0;                // m/s
    double max_descent = 2.5;              // m/s
    double waypoint_capture_radius = 30.0; // m

    void validate() const;
};

/// Uncertainty injected at batch initialization and into the logged states.
struct UncertaintyConfig {
    double pos_jitter = 10.0;                    // m, uniform disc radius (first batch)
    std::array<double, 2> alt_range{45.0, 55.0}; // m
    std::array<double, 2> speed_range{21.0, 23.0}; // m/s
    double heading_jitter = 5.0;                 // deg, +- uniform
    double log_noise_pos = 3.0;                  // m, sigma per horizontal axis
    double log_noise_alt = 1.0;                  // m, sigma
    double resample_window_c = 2.0;              // s
    std::uint64_t seed = 0;

    void validate() const;
};

using Trajectory = std::vector<State>;

/// N logged trajectories over one volume horizon, sampled at 1 s.
struct TrajectorySet {
    std::vector<Trajectory> trajectories;
    double t0 = 0.0;
    int duration = 0;  // seconds; every trajectory has duration + 1 samples
    std::size_t center_index = 0;

    std::size_t size() const { return trajectories.size(); }
};

/// Per-field normal distribution fitted to the states of a previous batch
/// inside a small time window. Heading uses circular statistics.
struct StateDistribution {
    double t = 0.0;  // scenario time the distribution refers to
    // mean/sigma over local-plane x, y, altitude, heading (deg), vs, tas
    std::array<double, 6> mean{};
    std::array<double, 6> sigma{};

    State mean_state(const geo::Projection& proj) const;
};

/// Acceptance region for resampled positions: a box around the previous
/// volume, expanded by `margin` meters on every axis.
struct ResampleBounds {
    geom::Box3 region;
    double margin = 50.0;  // use +inf to accept everything
};

/// Draw n independent initial states around the route origin: position
/// uniform in a horizontal disc of radius pos_jitter, altitude and airspeed
/// uniform in their ranges, heading = leg heading +- uniform jitter.
/// Deterministic under a fixed cfg.seed. Throws ConfigError when n < 2.
std::vector<State> init_states_uniform(const geo::GeoPoint& route_origin,
                                       double initial_leg_heading_deg,
                                       const UncertaintyConfig& cfg, int n,
                                       const geo::Projection& proj, double t0 = 0.0,
                                       std::uint64_t salt = 0);

/// Unjittered nominal start state: route origin at the midpoint of the
/// altitude and speed ranges, heading along the initial leg.
State nominal_state_uniform(const geo::GeoPoint& route_origin, double initial_leg_heading_deg,
                            const UncertaintyConfig& cfg, double t0 = 0.0);

/// Fit per-field normals to all states of `prev` with timestamps inside
/// [offset - c, offset + c] (relative to prev.t0).
StateDistribution fit_state_distribution(const TrajectorySet& prev, double offset_s,
                                         const UncertaintyConfig& cfg,
                                         const geo::Projection& proj);

/// Draw n states from the fitted normals of the previous batch at the given
/// offset. Positions are rejected and redrawn until they fall inside
/// bounds.region expanded by bounds.margin; 1000 consecutive rejections
/// raise InfeasibleResample. Emitted states carry t = prev.t0 + offset.
std::vector<State> init_states_from_batch(const TrajectorySet& prev, double offset_s,
                                          const UncertaintyConfig& cfg,
                                          const ResampleBounds& bounds, int n,
                                          const geo::Projection& proj, std::uint64_t salt = 0);

/// One saturating autopilot step toward the target waypoint: heading slews at
/// most max_turn_rate*dt, airspeed at most max_accel*dt toward cruise_tas,
/// altitude at most the climb/descent limit, then the position advances
/// tas*dt along the updated heading.
State step(const State& s, const geo::GeoPoint& target, const AircraftModel& model, double dt,
           const geo::Projection& proj);

/// Integrate every aircraft at dt = 0.1 s for `duration_s` seconds, logging a
/// state each 1.0 s with Gaussian position/altitude noise. The whole batch
/// starts on the leg closest to states[0] and each craft advances on its own
/// waypoint captures; airspeed converges from the craft's initial value to
/// the model cruise speed unless the active waypoint commands one.
/// states[0] is the designated center (center_index = 0 in the result).
TrajectorySet run_batch(const std::vector<State>& states, const Route& route,
                        const AircraftModel& model, const UncertaintyConfig& cfg, int duration_s,
                        const geo::Projection& proj, std::uint64_t salt = 0);

/// CSV export: header traj_id,t,lat,lon,alt,heading,vs,tas; 9 significant digits.
void export_csv(const TrajectorySet& ts, std::ostream& os);

/// Shortest signed angular difference a - b wrapped to [-180, 180].
double heading_diff(double a_deg, double b_deg);

/// Wrap to [0, 360).
double normalize_heading(double deg);

// Exposed for pipeline/waypoint logic: index of the waypoint an aircraft at
// `pos` should currently track (the end of the nearest route segment).
// Legs within `tie_slack` meters of the nearest count as ties and the
// latest of them wins.
std::size_t current_waypoint_index(const Route& route, const geo::LocalPoint& pos,
                                   double tie_slack = 0.0);

}  // namespace airlane::sim
