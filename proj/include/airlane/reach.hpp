#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "airlane/geo.hpp"
#include "airlane/geometry.hpp"

namespace airlane::reach {

/// Trajectory mapped into the unit cube: one (lat, lon, alt) triple per
/// logged second, each axis scaled to [0, 1].
using NormTraj = std::vector<std::array<double, 3>>;

/// One piece of the per-axis deviation bound. On [t_start, t_end] the bound
/// is initial_radius * k * exp(gamma * (t - t_start)).
struct DiscrepancySegment {
    double t_start = 0.0;
    double t_end = 0.0;
    double k = 1.0;      // >= 1
    double gamma = 0.0;  // 1/s
};

/// Per-axis piecewise-exponential bound on the distance between the center
/// trajectory and any trajectory of the batch. Invariants: segments tile
/// [0, duration], the bound is continuous across piece boundaries, every
/// k >= 1, the curve dominates the observed training deviations at every
/// sample, and no single piece-boundary value can be lowered without
/// breaking one of those conditions.
struct DiscrepancyModel {
    std::array<std::vector<DiscrepancySegment>, 3> segments;
    std::array<double, 3> initial_radius{};
    int duration = 0;

    /// Bound value for one axis; t is clamped into [0, duration].
    double bound(int axis, double t) const;
};

/// Sequence of `duration` axis-aligned boxes in normalized coordinates;
/// box k covers the slice [k, k+1] of the horizon starting at t0.
struct ReachTube {
    std::vector<geom::Box3> segments;
    double t0 = 0.0;
    int duration = 0;
};

struct VerificationReport {
    std::size_t total_points = 0;
    std::size_t contained_points = 0;

    double ratio() const {
        return total_points == 0 ? 1.0
                                 : static_cast<double>(contained_points) /
                                       static_cast<double>(total_points);
    }
    bool pass(double threshold) const { return ratio() >= threshold; }
};

/// Fit the deviation bound from a center trajectory and its training set.
/// All trajectories must share the center's length (>= 2 samples, one per
/// second). floor_norm is a per-axis lower clamp on observed deviations so
/// that a collapsed axis still produces a usable bound; pass 0 to disable.
/// Throws InsufficientData on an empty training set or mismatched lengths.
DiscrepancyModel learn_discrepancy(const NormTraj& center, std::span<const NormTraj> training,
                                   const std::array<double, 3>& floor_norm = {0.0, 0.0, 0.0});

/// Sweep the center trajectory through the model: box k is the hull of the
/// center at seconds k and k+1, inflated per axis by the larger bound at the
/// two endpoints (never less than floor_norm).
ReachTube compute_reach_tube(const NormTraj& center, const DiscrepancyModel& model, double t0,
                             const std::array<double, 3>& floor_norm = {0.0, 0.0, 0.0});

/// Fraction of holdout samples covered by the tube. The sample at second k
/// is checked against box min(k, duration - 1).
VerificationReport verify_tube(const ReachTube& tube, std::span<const NormTraj> holdout);

/// Map a normalized-space tube into local meters. Axis order changes from
/// (lat, lon, alt) to (x east, y north, z altitude), and every axis is
/// widened where needed so its half-extent is at least min_half_extent_m.
ReachTube tube_to_local(const ReachTube& tube, const geo::NormalizationBox& nbox,
                        const geo::Projection& proj,
                        const std::array<double, 3>& min_half_extent_m = {0.0, 0.0, 0.0});

/// Greedy farthest-point selection of `count` training trajectories, seeded
/// at the center. The metric is the maximum over time of the Euclidean
/// distance between same-second samples. Returns indices into `all`
/// (center_index itself is never returned). Ties break toward lower index.
std::vector<std::size_t> select_training(std::span<const NormTraj> all, std::size_t center_index,
                                         std::size_t count);

}  // namespace airlane::reach
