#pragma once

// Independent collision oracle: walks a segment at a fixed pitch and tests
// every sample point against the blocked areas. Deliberately avoids the
// production predicates so the two implementations can cross-check each
// other. A sampled check can miss grazes narrower than the pitch; callers
// use it in the safe direction (production says free, oracle must agree).

#include <algorithm>
#include <cmath>

#include "airlane/geometry.hpp"
#include "airlane/planner.hpp"

namespace testsupport {

inline bool sampled_point_blocked(const airlane::geom::Vec2& p,
                                  const airlane::plan::Environment& env) {
    for (const auto& z : env.nfzs) {
        if (airlane::geom::point_in_polygon(p, z.polygon)) return true;
    }
    for (const auto& r : env.blocked) {
        if (r.contains(p)) return true;
    }
    return false;
}

inline bool sampled_segment_blocked(const airlane::geom::Vec2& a, const airlane::geom::Vec2& b,
                                    const airlane::plan::Environment& env,
                                    double pitch = 0.5) {
    const double len = airlane::geom::dist(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(len / pitch)));
    for (int k = 0; k <= n; ++k) {
        const double u = static_cast<double>(k) / n;
        if (sampled_point_blocked(a + (b - a) * u, env)) return true;
    }
    return false;
}

}  // namespace testsupport
