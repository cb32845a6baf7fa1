#pragma once

#include <optional>
#include <vector>

#include "airlane/geo.hpp"

namespace airlane {

/// Route waypoint in the local plane. A waypoint may carry a commanded
/// airspeed; when absent the aircraft holds its own cruise setpoint.
struct Waypoint {
    geo::LocalPoint pos;
    std::optional<double> tas;  // m/s
};

struct Route {
    std::vector<Waypoint> waypoints;
    double departure_time = 0.0;  // seconds since scenario epoch
    double speed_min = 0.0;       // m/s; speed_min == speed_max means fixed cruise
    double speed_max = 0.0;

    double length() const {
        double acc = 0.0;
        for (size_t i = 1; i < waypoints.size(); ++i) {
            const auto& a = waypoints[i - 1].pos;
            const auto& b = waypoints[i].pos;
            acc += std::hypot(b.x - a.x, b.y - a.y);
        }
        return acc;
    }
};

}  // namespace airlane
