#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "airlane/geometry.hpp"
#include "airlane/ovmodel.hpp"
#include "airlane/route.hpp"

namespace airlane::plan {

/// Footprint of a foreign volume with its validity window. Informational:
/// collision gating against these happens through find_conflicts, not
/// through the static edge checks.
struct DynamicObstacle {
    geom::Rect footprint;
    double t_begin = 0.0;
    double t_end = 0.0;
};

/// Planning world. Static blockage = no-fly zones plus any rectangles
/// accumulated during conflict repair. Planning is horizontal: zones block
/// as full-height columns regardless of their altitude range.
struct Environment {
    geom::Rect bounds;
    std::vector<ov::NoFlyZone> nfzs;
    std::vector<DynamicObstacle> dynamic_obstacles;
    std::vector<geom::Rect> blocked;

    bool point_free(const geom::Vec2& p) const;
    bool segment_free(const geom::Vec2& a, const geom::Vec2& b) const;
};

struct TreeNode {
    geom::Vec2 pos;
    std::size_t parent = kNoParent;
    double cost = 0.0;
    std::vector<std::size_t> children;
    bool alive = false;
    bool orphan = false;  // detached during repair; outside the main tree

    static constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);
};

/// Fixed-size random tree. Storage slots are recycled through a free list,
/// so indices stay stable across removals. Detached (orphan) nodes keep
/// counting toward the budget until reattached or discarded.
struct PlanTree {
    std::vector<TreeNode> nodes;
    std::vector<std::size_t> free_slots;
    std::size_t root = 0;
    std::size_t max_nodes = 150;
    std::size_t latest = 0;
    std::size_t alive_count = 0;
    std::vector<std::size_t> solution_path;  // root..goal when a solution exists
    std::uint64_t rng_seed = 0;
    std::mt19937_64 rng;

    static PlanTree start(const geom::Vec2& root_pos, std::size_t max_nodes,
                          std::uint64_t seed);

    std::size_t add_node(const geom::Vec2& pos, std::size_t parent);
    void remove_leaf(std::size_t idx);
    bool on_solution_path(std::size_t idx) const;
};

/// One growth iteration: sample (the goal with probability goal_bias),
/// steer from the nearest main-tree node by at most `step`, insert when the
/// edge is statically free, choose the cheapest parent among neighbors
/// within 2 * step, then rewire until no neighbor can improve through
/// another. Over-budget trees shed one random childless node afterwards.
/// Returns the new node's index, or nullopt when the sample was rejected.
std::optional<std::size_t> grow(PlanTree& tree, const Environment& env, double step,
                                const geom::Vec2& goal, double goal_bias);

/// Remove one childless node chosen uniformly among those that are not the
/// root, not `protected_idx`, not on the solution path, and not detached.
/// No eligible node means no-op.
void force_remove(PlanTree& tree, std::size_t protected_idx);

struct PlanOutcome {
    bool success = false;
    Route route;
    PlanTree tree;
    std::size_t iterations = 0;
};

/// Grow until the goal joins the tree or the iteration budget runs out.
/// The returned route's waypoints lie in the horizontal plane (z = 0);
/// departure time and speeds are left for the caller to assign.
PlanOutcome plan_candidate(const Environment& env, const geom::Vec2& origin,
                           const geom::Vec2& goal, double step, std::size_t max_nodes,
                           std::size_t iteration_budget, std::uint64_t seed);

/// Shorten a route by farthest-first direct connections: from each waypoint,
/// try to jump to the farthest of the next `opt_factor` waypoints whose
/// direct segment is statically free. Never lengthens, never introduces a
/// blocked edge. opt_factor < 2 leaves the route untouched.
Route rope_optimize(const Route& route, const Environment& env, std::size_t opt_factor);

struct TimedWaypoint {
    geo::LocalPoint wp;
    double earliest = 0.0;
    double latest = 0.0;
};

/// Earliest/latest arrival per waypoint from cumulative distance over the
/// speed bounds, offset by the departure time. Fixed cruise speed collapses
/// both to one instant. Throws ConfigError on non-positive speeds.
std::vector<TimedWaypoint> estimate_timed_route(const Route& route);

struct Conflict {
    std::size_t segment_index = 0;   // between waypoints i and i+1
    std::size_t contract_index = 0;
    std::size_t ov_index = 0;
    std::size_t entry_index = 0;
    double probability = 0.0;
    std::vector<geom::Rect> ov_footprints;  // every entry rect of the offending volume
};

/// Scan each route segment against every foreign volume entry: a conflict
/// needs spatial overlap with the entry's footprint, a point on the overlap
/// whose arrival window intersects the entry's 1 s validity, and occupancy
/// probability above the threshold in the cell at that point.
std::vector<Conflict> find_conflicts(std::span<const TimedWaypoint> timed,
                                     std::span<const ov::Contract> foreign, double threshold);

struct RepairResult {
    bool success = false;
    Route route;
};

/// Block the conflicting volume's footprint, drop every invalidated node,
/// then restore a root-to-goal path: Reconnect attempts a direct edge from
/// the main tree to the severed solution subtree; failing that, Regrow runs
/// biased growth until the subtree is reachable again. The tree must hold a
/// solution path. Fails when the goal itself is blocked or the regrow
/// budget runs out.
RepairResult sever_and_repair(PlanTree& tree, const Conflict& conflict, Environment& env,
                              double step, std::size_t regrow_budget = 5000);

/// Route as a GeoJSON LineString feature with departure time and speed
/// bounds in the properties.
nlohmann::json route_geojson(const Route& route, const geo::Projection& proj);

/// Edge list "parent_x,parent_y,child_x,child_y" for debugging/plots.
std::string tree_edges_csv(const PlanTree& tree);

}  // namespace airlane::plan
