#include "airlane/reach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "airlane/errors.hpp"

namespace airlane::reach {

namespace {

constexpr int kSecondsPerSegment = 10;
constexpr double kLogFloor = 1e-12;  // deviations below this are treated as zero spread

}  // namespace

double DiscrepancyModel::bound(int axis, double t) const {
    const auto& segs = segments[static_cast<std::size_t>(axis)];
    if (segs.empty()) return initial_radius[static_cast<std::size_t>(axis)];
    const double tc = std::clamp(t, 0.0, static_cast<double>(duration));
    const DiscrepancySegment* seg = &segs.back();
    for (const auto& s : segs) {
        if (tc <= s.t_end) {
            seg = &s;
            break;
        }
    }
    return initial_radius[static_cast<std::size_t>(axis)] * seg->k *
           std::exp(seg->gamma * (tc - seg->t_start));
}

DiscrepancyModel learn_discrepancy(const NormTraj& center, std::span<const NormTraj> training,
                                   const std::array<double, 3>& floor_norm) {
    if (center.size() < 2) {
        throw InsufficientData("discrepancy learning needs at least 2 samples per trajectory");
    }
    if (training.empty()) {
        throw InsufficientData("discrepancy learning needs a non-empty training set");
    }
    for (const NormTraj& t : training) {
        if (t.size() != center.size()) {
            throw InsufficientData("training trajectories must match the center's length");
        }
    }

    const int duration = static_cast<int>(center.size()) - 1;
    const int n_segments = (duration + kSecondsPerSegment - 1) / kSecondsPerSegment;

    DiscrepancyModel model;
    model.duration = duration;

    for (int axis = 0; axis < 3; ++axis) {
        const auto a = static_cast<std::size_t>(axis);

        // Worst observed deviation from the center at every logged second.
        std::vector<double> dev(center.size(), 0.0);
        for (const NormTraj& t : training) {
            for (std::size_t k = 0; k < center.size(); ++k) {
                dev[k] = std::max(dev[k], std::abs(t[k][a] - center[k][a]));
            }
        }
        const double floor = std::max(floor_norm[a], kLogFloor);
        const double r0 = std::max(dev[0], floor);
        model.initial_radius[a] = r0;

        std::vector<double> y(center.size());
        for (std::size_t k = 0; k < center.size(); ++k) {
            y[k] = std::log(std::max(dev[k], floor) / r0);
        }

        std::vector<int> starts(static_cast<std::size_t>(n_segments));
        std::vector<int> ends(static_cast<std::size_t>(n_segments));
        for (int s = 0; s < n_segments; ++s) {
            starts[static_cast<std::size_t>(s)] = s * kSecondsPerSegment;
            ends[static_cast<std::size_t>(s)] =
                std::min((s + 1) * kSecondsPerSegment, duration);
        }

        // The bound in log space is the lowest continuous piecewise-linear
        // curve on the segment grid that stays above every sample and above
        // zero at the knots. Node values are solved by coordinate descent:
        // each sample couples only the two knots of its segment, so lowering
        // one knot to the minimum its neighbors allow keeps the curve
        // feasible, and sweeps stop when no knot can drop further.
        const auto n_nodes = static_cast<std::size_t>(n_segments) + 1;
        std::vector<double> node(n_nodes, 0.0);
        for (int s = 0; s < n_segments; ++s) {
            const auto si = static_cast<std::size_t>(s);
            double peak = 0.0;
            for (int k = starts[si]; k <= ends[si]; ++k) {
                peak = std::max(peak, y[static_cast<std::size_t>(k)]);
            }
            node[si] = std::max(node[si], peak);
            node[si + 1] = std::max(node[si + 1], peak);
        }
        // Lowest value knot s can take with its neighbors held fixed.
        auto knot_floor = [&](std::size_t s) {
            double need = 0.0;
            if (s > 0) {
                const int st = starts[s - 1];
                const int en = ends[s - 1];
                for (int k = st + 1; k <= en; ++k) {
                    const double lam = double(k - st) / double(en - st);
                    need = std::max(
                        need,
                        (y[static_cast<std::size_t>(k)] - (1.0 - lam) * node[s - 1]) / lam);
                }
            }
            if (s < n_nodes - 1) {
                const int st = starts[s];
                const int en = ends[s];
                for (int k = st; k < en; ++k) {
                    const double lam = double(k - st) / double(en - st);
                    need = std::max(
                        need,
                        (y[static_cast<std::size_t>(k)] - lam * node[s + 1]) / (1.0 - lam));
                }
            }
            return need;
        };
        for (int sweep = 0; sweep < 64; ++sweep) {
            bool changed = false;
            for (std::size_t s = 0; s < n_nodes; ++s) {
                const double low = knot_floor(s);
                if (low < node[s] - 1e-15) {
                    node[s] = low;
                    changed = true;
                }
            }
            if (!changed) break;
        }

        auto& segs = model.segments[a];
        segs.resize(static_cast<std::size_t>(n_segments));
        for (int s = 0; s < n_segments; ++s) {
            const auto si = static_cast<std::size_t>(s);
            auto& seg = segs[si];
            seg.t_start = starts[si];
            seg.t_end = ends[si];
            seg.gamma = (node[si + 1] - node[si]) / double(ends[si] - starts[si]);
            seg.k = std::exp(node[si]);
        }
    }
    return model;
}

ReachTube compute_reach_tube(const NormTraj& center, const DiscrepancyModel& model, double t0,
                             const std::array<double, 3>& floor_norm) {
    if (static_cast<int>(center.size()) != model.duration + 1) {
        throw InsufficientData("center trajectory length must match the model duration");
    }
    ReachTube tube;
    tube.t0 = t0;
    tube.duration = model.duration;
    tube.segments.reserve(static_cast<std::size_t>(model.duration));
    for (int k = 0; k < model.duration; ++k) {
        geom::Box3 box;
        for (int axis = 0; axis < 3; ++axis) {
            const auto a = static_cast<std::size_t>(axis);
            const double c0 = center[static_cast<std::size_t>(k)][a];
            const double c1 = center[static_cast<std::size_t>(k) + 1][a];
            const double infl = std::max({model.bound(axis, k), model.bound(axis, k + 1.0),
                                          floor_norm[a]});
            box.lo[a] = std::min(c0, c1) - infl;
            box.hi[a] = std::max(c0, c1) + infl;
        }
        tube.segments.push_back(box);
    }
    return tube;
}

VerificationReport verify_tube(const ReachTube& tube, std::span<const NormTraj> holdout) {
    VerificationReport report;
    if (tube.segments.empty()) return report;
    for (const NormTraj& traj : holdout) {
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const std::size_t seg = std::min(k, tube.segments.size() - 1);
            ++report.total_points;
            if (tube.segments[seg].contains(traj[k][0], traj[k][1], traj[k][2])) {
                ++report.contained_points;
            }
        }
    }
    return report;
}

ReachTube tube_to_local(const ReachTube& tube, const geo::NormalizationBox& nbox,
                        const geo::Projection& proj,
                        const std::array<double, 3>& min_half_extent_m) {
    ReachTube out;
    out.t0 = tube.t0;
    out.duration = tube.duration;
    out.segments.reserve(tube.segments.size());
    for (const auto& seg : tube.segments) {
        const auto glo = nbox.denormalize(seg.lo);
        const auto ghi = nbox.denormalize(seg.hi);
        geom::Box3 box;
        box.lo = {(glo[1] - proj.origin.lon) * proj.m_per_deg_lon,
                  (glo[0] - proj.origin.lat) * proj.m_per_deg_lat, glo[2]};
        box.hi = {(ghi[1] - proj.origin.lon) * proj.m_per_deg_lon,
                  (ghi[0] - proj.origin.lat) * proj.m_per_deg_lat, ghi[2]};
        for (int a = 0; a < 3; ++a) {
            const auto ax = static_cast<std::size_t>(a);
            const double half = 0.5 * (box.hi[ax] - box.lo[ax]);
            const double want = min_half_extent_m[ax];
            if (half < want) {
                const double mid = 0.5 * (box.lo[ax] + box.hi[ax]);
                box.lo[ax] = mid - want;
                box.hi[ax] = mid + want;
            }
        }
        out.segments.push_back(box);
    }
    return out;
}

std::vector<std::size_t> select_training(std::span<const NormTraj> all, std::size_t center_index,
                                         std::size_t count) {
    if (center_index >= all.size()) {
        throw InsufficientData("center index outside the trajectory set");
    }
    auto traj_dist = [&](std::size_t i, std::size_t j) {
        const NormTraj& a = all[i];
        const NormTraj& b = all[j];
        const std::size_t n = std::min(a.size(), b.size());
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double dx = a[k][0] - b[k][0];
            const double dy = a[k][1] - b[k][1];
            const double dz = a[k][2] - b[k][2];
            worst = std::max(worst, dx * dx + dy * dy + dz * dz);
        }
        return worst;
    };

    std::vector<double> min_dist(all.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i != center_index) min_dist[i] = traj_dist(i, center_index);
    }
    min_dist[center_index] = -1.0;

    std::vector<std::size_t> picked;
    const std::size_t want = std::min(count, all.size() - 1);
    picked.reserve(want);
    while (picked.size() < want) {
        std::size_t best = all.size();
        double best_d = -1.0;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (min_dist[i] > best_d) {
                best_d = min_dist[i];
                best = i;
            }
        }
        picked.push_back(best);
        min_dist[best] = -1.0;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (min_dist[i] >= 0.0) {
                min_dist[i] = std::min(min_dist[i], traj_dist(i, best));
            }
        }
    }
    return picked;
}

}  // namespace airlane::reach
