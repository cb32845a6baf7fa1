#include "airlane/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "airlane/errors.hpp"
#include "airlane/rng.hpp"

namespace airlane::plan {

namespace {

constexpr double kRewireMargin = 1e-9;  // float guard; also blocks cycles through ancestors

geom::Vec2 to2(const geo::LocalPoint& p) { return {p.x, p.y}; }

bool segment_hits_rect(const geom::Vec2& a, const geom::Vec2& b, const geom::Rect& r) {
    if (geom::dist(a, b) == 0.0) return r.contains(a);
    return geom::clip_segment_to_rect(a, b, r).has_value();
}

}  // namespace

bool Environment::point_free(const geom::Vec2& p) const {
    if (!bounds.contains(p)) return false;
    for (const auto& z : nfzs) {
        if (geom::point_in_polygon(p, z.polygon)) return false;
    }
    for (const auto& r : blocked) {
        if (r.contains(p)) return false;
    }
    return true;
}

bool Environment::segment_free(const geom::Vec2& a, const geom::Vec2& b) const {
    if (geom::dist(a, b) == 0.0) return point_free(a);
    if (!point_free(a) || !point_free(b)) return false;
    for (const auto& z : nfzs) {
        if (geom::segment_intersects_polygon(a, b, z.polygon)) return false;
    }
    for (const auto& r : blocked) {
        if (geom::clip_segment_to_rect(a, b, r)) return false;
    }
    return true;
}

PlanTree PlanTree::start(const geom::Vec2& root_pos, std::size_t max_nodes, std::uint64_t seed) {
    if (max_nodes == 0) throw ConfigError("PlanTree: max_nodes must be positive");
    PlanTree t;
    t.max_nodes = max_nodes;
    t.rng_seed = seed;
    t.rng = derive_rng(seed, RngStream::kPlanner);
    t.root = t.add_node(root_pos, TreeNode::kNoParent);
    return t;
}

std::size_t PlanTree::add_node(const geom::Vec2& pos, std::size_t parent) {
    std::size_t idx;
    if (!free_slots.empty()) {
        idx = free_slots.back();
        free_slots.pop_back();
        nodes[idx] = TreeNode{};
    } else {
        idx = nodes.size();
        nodes.emplace_back();
    }
    TreeNode& n = nodes[idx];
    n.pos = pos;
    n.parent = parent;
    n.alive = true;
    if (parent != TreeNode::kNoParent) {
        n.cost = nodes[parent].cost + geom::dist(nodes[parent].pos, pos);
        nodes[parent].children.push_back(idx);
    }
    latest = idx;
    ++alive_count;
    return idx;
}

void PlanTree::remove_leaf(std::size_t idx) {
    TreeNode& n = nodes[idx];
    if (!n.alive) throw ConfigError("remove_leaf: node is not alive");
    if (!n.children.empty()) throw ConfigError("remove_leaf: node has children");
    if (n.parent != TreeNode::kNoParent) {
        auto& sibs = nodes[n.parent].children;
        sibs.erase(std::remove(sibs.begin(), sibs.end(), idx), sibs.end());
    }
    n = TreeNode{};
    free_slots.push_back(idx);
    --alive_count;
}

bool PlanTree::on_solution_path(std::size_t idx) const {
    return std::find(solution_path.begin(), solution_path.end(), idx) != solution_path.end();
}

namespace {

/// Shift the costs of every node below `idx` by the same delta. Edge lengths
/// below are unchanged, so a parent-cost change propagates uniformly. The
/// shifted nodes are appended to `touched`.
void shift_subtree_costs(PlanTree& tree, std::size_t idx, double delta,
                         std::vector<std::size_t>& touched) {
    for (std::size_t c : tree.nodes[idx].children) {
        tree.nodes[c].cost += delta;
        touched.push_back(c);
        shift_subtree_costs(tree, c, delta, touched);
    }
}

bool is_ancestor(const PlanTree& tree, std::size_t maybe_anc, std::size_t idx) {
    std::size_t cur = idx;
    while (cur != TreeNode::kNoParent) {
        if (cur == maybe_anc) return true;
        cur = tree.nodes[cur].parent;
    }
    return false;
}

std::vector<std::size_t> neighbors_within(const PlanTree& tree, const geom::Vec2& p,
                                          double radius) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (n.alive && !n.orphan && geom::dist(n.pos, p) <= radius) out.push_back(i);
    }
    return out;
}

/// Rewire around `seed_idx`, then keep revisiting any node whose cost
/// dropped until no neighbor can improve through another. Termination:
/// every accepted rewire lowers a cost by more than kRewireMargin.
void rewire_cascade(PlanTree& tree, const Environment& env, double radius,
                    std::size_t seed_idx) {
    std::vector<std::size_t> queue{seed_idx};
    while (!queue.empty()) {
        const std::size_t idx = queue.back();
        queue.pop_back();
        if (!tree.nodes[idx].alive) continue;
        const geom::Vec2 pos = tree.nodes[idx].pos;
        for (std::size_t m : neighbors_within(tree, pos, radius)) {
            if (m == idx || m == tree.root) continue;
            const double edge = geom::dist(pos, tree.nodes[m].pos);
            const double via = tree.nodes[idx].cost + edge;
            if (via + kRewireMargin >= tree.nodes[m].cost) continue;
            if (is_ancestor(tree, m, idx)) continue;
            if (!env.segment_free(pos, tree.nodes[m].pos)) continue;
            TreeNode& mn = tree.nodes[m];
            auto& sibs = tree.nodes[mn.parent].children;
            sibs.erase(std::remove(sibs.begin(), sibs.end(), m), sibs.end());
            mn.parent = idx;
            tree.nodes[idx].children.push_back(m);
            const double delta = via - mn.cost;
            mn.cost = via;
            queue.push_back(m);
            shift_subtree_costs(tree, m, delta, queue);  // descendants got cheaper too
        }
    }
}

}  // namespace

std::optional<std::size_t> grow(PlanTree& tree, const Environment& env, double step,
                                const geom::Vec2& goal, double goal_bias) {
    if (step <= 0.0) throw ConfigError("grow: step must be positive");
    if (env.bounds.width() <= 0.0 || env.bounds.height() <= 0.0) {
        throw ConfigError("grow: environment bounds are degenerate");
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    geom::Vec2 sample;
    if (unit(tree.rng) < goal_bias) {
        sample = goal;
    } else {
        std::uniform_real_distribution<double> sx(env.bounds.lo.x, env.bounds.hi.x);
        std::uniform_real_distribution<double> sy(env.bounds.lo.y, env.bounds.hi.y);
        sample.x = sx(tree.rng);
        sample.y = sy(tree.rng);
    }

    std::size_t nearest = TreeNode::kNoParent;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (!n.alive || n.orphan) continue;
        const double d = geom::dist(n.pos, sample);
        if (d < best) {
            best = d;
            nearest = i;
        }
    }
    if (nearest == TreeNode::kNoParent) throw ConfigError("grow: tree has no live nodes");
    if (best == 0.0) return std::nullopt;  // duplicate of an existing node

    const geom::Vec2 from = tree.nodes[nearest].pos;
    const geom::Vec2 new_pos =
        best <= step ? sample : from + (sample - from) * (step / best);
    if (!env.point_free(new_pos) || !env.segment_free(from, new_pos)) return std::nullopt;

    const double radius = 2.0 * step;
    std::size_t parent = nearest;
    double parent_cost = tree.nodes[nearest].cost + geom::dist(from, new_pos);
    const auto near = neighbors_within(tree, new_pos, radius);
    for (std::size_t m : near) {
        if (m == nearest) continue;
        const double via = tree.nodes[m].cost + geom::dist(tree.nodes[m].pos, new_pos);
        if (via + kRewireMargin < parent_cost && env.segment_free(tree.nodes[m].pos, new_pos)) {
            parent = m;
            parent_cost = via;
        }
    }

    const std::size_t idx = tree.add_node(new_pos, parent);
    rewire_cascade(tree, env, radius, idx);

    while (tree.alive_count > tree.max_nodes) {
        const std::size_t before = tree.alive_count;
        force_remove(tree, idx);
        if (tree.alive_count == before) break;  // everything removable is protected
    }
    return idx;
}

void force_remove(PlanTree& tree, std::size_t protected_idx) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (!n.alive || n.orphan || !n.children.empty()) continue;
        if (i == tree.root || i == protected_idx) continue;
        if (tree.on_solution_path(i)) continue;
        eligible.push_back(i);
    }
    if (eligible.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    tree.remove_leaf(eligible[pick(tree.rng)]);
}

namespace {

std::vector<std::size_t> path_to_root(const PlanTree& tree, std::size_t idx) {
    std::vector<std::size_t> path;
    for (std::size_t cur = idx; cur != TreeNode::kNoParent; cur = tree.nodes[cur].parent) {
        path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

Route route_from_path(const PlanTree& tree, const std::vector<std::size_t>& path) {
    Route r;
    for (std::size_t idx : path) {
        const geom::Vec2& p = tree.nodes[idx].pos;
        if (!r.waypoints.empty()) {
            const auto& prev = r.waypoints.back().pos;
            if (prev.x == p.x && prev.y == p.y) continue;
        }
        r.waypoints.push_back({{p.x, p.y, 0.0}, std::nullopt});
    }
    return r;
}

}  // namespace

PlanOutcome plan_candidate(const Environment& env, const geom::Vec2& origin,
                           const geom::Vec2& goal, double step, std::size_t max_nodes,
                           std::size_t iteration_budget, std::uint64_t seed) {
    if (!env.point_free(origin)) throw ConfigError("plan_candidate: origin is blocked");
    if (!env.point_free(goal)) throw ConfigError("plan_candidate: goal is blocked");

    PlanOutcome out;
    out.tree = PlanTree::start(origin, max_nodes, seed);

    if (geom::dist(origin, goal) < 1e-9) {
        out.tree.solution_path = {out.tree.root};
        out.route = route_from_path(out.tree, out.tree.solution_path);
        out.route.waypoints.push_back({{goal.x, goal.y, 0.0}, std::nullopt});
        out.success = true;
        return out;
    }

    for (std::size_t it = 0; it < iteration_budget; ++it) {
        const auto idx = grow(out.tree, env, step, goal, 0.05);
        out.iterations = it + 1;
        if (idx && geom::dist(out.tree.nodes[*idx].pos, goal) < 1e-9) {
            out.tree.solution_path = path_to_root(out.tree, *idx);
            out.route = route_from_path(out.tree, out.tree.solution_path);
            out.success = true;
            break;
        }
    }
    return out;
}

Route rope_optimize(const Route& route, const Environment& env, std::size_t opt_factor) {
    Route out = route;
    if (route.waypoints.size() < 3 || opt_factor < 2) return out;

    const auto& wps = route.waypoints;
    std::vector<Waypoint> kept;
    kept.push_back(wps.front());
    std::size_t i = 0;
    while (i + 1 < wps.size()) {
        std::size_t next = i + 1;
        const std::size_t far = std::min(i + opt_factor, wps.size() - 1);
        for (std::size_t j = far; j >= i + 2; --j) {
            if (env.segment_free(to2(wps[i].pos), to2(wps[j].pos))) {
                next = j;
                break;
            }
        }
        kept.push_back(wps[next]);
        i = next;
    }
    out.waypoints = std::move(kept);
    return out;
}

std::vector<TimedWaypoint> estimate_timed_route(const Route& route) {
    if (route.waypoints.empty()) throw ConfigError("estimate_timed_route: empty route");
    if (route.speed_min <= 0.0 || route.speed_max <= 0.0) {
        throw ConfigError("estimate_timed_route: speeds must be positive");
    }
    if (route.speed_min > route.speed_max) {
        throw ConfigError("estimate_timed_route: speed_min exceeds speed_max");
    }
    std::vector<TimedWaypoint> out;
    out.reserve(route.waypoints.size());
    double cum = 0.0;
    out.push_back({route.waypoints.front().pos, route.departure_time, route.departure_time});
    for (std::size_t i = 1; i < route.waypoints.size(); ++i) {
        const auto& a = route.waypoints[i - 1].pos;
        const auto& b = route.waypoints[i].pos;
        cum += std::hypot(b.x - a.x, b.y - a.y);
        out.push_back({b, route.departure_time + cum / route.speed_max,
                       route.departure_time + cum / route.speed_min});
    }
    return out;
}

namespace {

/// Validity interval of entry `ei` within its volume, closed at the volume's
/// temporal end.
std::pair<double, double> entry_validity(const ov::OperationalVolume& v, std::size_t ei) {
    const double t = v.entries[ei].t;
    return {t, std::min(t + 1.0, v.t0 + v.t_d)};
}

/// Split [u0, u1] at every parameter where the segment a->b crosses a grid
/// line, so each returned breakpoint pair brackets exactly one cell.
std::vector<double> cell_breakpoints(const geom::Vec2& a, const geom::Vec2& b, double u0,
                                     double u1, const ov::OccupancyGrid& grid) {
    std::vector<double> cuts{u0, u1};
    const double cell = grid.cell_size;
    if (cell > 0.0) {
        const auto add_axis = [&](double pa, double pb, double org) {
            const double d = pb - pa;
            if (d == 0.0) return;
            const double lo = std::min(pa + u0 * d, pa + u1 * d);
            const double hi = std::max(pa + u0 * d, pa + u1 * d);
            for (double line = org + std::ceil((lo - org) / cell) * cell; line <= hi;
                 line += cell) {
                const double u = (line - pa) / d;
                if (u > u0 && u < u1) cuts.push_back(u);
            }
        };
        add_axis(a.x, b.x, grid.origin.x);
        add_axis(a.y, b.y, grid.origin.y);
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

}  // namespace

std::vector<Conflict> find_conflicts(std::span<const TimedWaypoint> timed,
                                     std::span<const ov::Contract> foreign, double threshold) {
    std::vector<Conflict> out;
    if (timed.size() < 2) return out;

    for (std::size_t i = 0; i + 1 < timed.size(); ++i) {
        const geom::Vec2 a = to2(timed[i].wp);
        const geom::Vec2 b = to2(timed[i + 1].wp);

        const auto window_at = [&](double u) -> std::pair<double, double> {
            return {timed[i].earliest + (timed[i + 1].earliest - timed[i].earliest) * u,
                    timed[i].latest + (timed[i + 1].latest - timed[i].latest) * u};
        };

        for (std::size_t ci = 0; ci < foreign.size(); ++ci) {
            for (std::size_t oi = 0; oi < foreign[ci].ovs.size(); ++oi) {
                const ov::OperationalVolume& vol = foreign[ci].ovs[oi];
                bool flagged = false;
                for (std::size_t ei = 0; ei < vol.entries.size() && !flagged; ++ei) {
                    const ov::OvEntry& entry = vol.entries[ei];
                    const geom::Rect fp = entry.region.footprint();
                    const auto clip = geom::clip_segment_to_rect(a, b, fp);
                    if (!clip) continue;
                    const auto [v0, v1] = entry_validity(vol, ei);

                    // Visit every grid cell the clipped span crosses. The
                    // arrival window over a sub-span is the hull of the
                    // windows at its ends (both bounds grow with distance).
                    const auto cuts =
                        cell_breakpoints(a, b, clip->first, clip->second, entry.grid);
                    for (std::size_t k = 0; k + 1 < cuts.size() && !flagged; ++k) {
                        const double ua = cuts[k];
                        const double ub = cuts[k + 1];
                        const double w0 = window_at(ua).first;
                        const double w1 = window_at(ub).second;
                        if (w0 > v1 || w1 < v0) continue;
                        const geom::Vec2 mid = a + (b - a) * ((ua + ub) / 2.0);
                        const double pr = entry.grid.probability(mid);
                        if (pr > threshold) {
                            Conflict c;
                            c.segment_index = i;
                            c.contract_index = ci;
                            c.ov_index = oi;
                            c.entry_index = ei;
                            c.probability = pr;
                            c.ov_footprints.reserve(vol.entries.size());
                            for (const auto& e : vol.entries) {
                                c.ov_footprints.push_back(e.region.footprint());
                            }
                            out.push_back(std::move(c));
                            flagged = true;
                        }
                    }
                }
            }
        }
    }
    return out;
}

namespace {

void set_orphan_flags(PlanTree& tree, std::size_t idx, bool value) {
    tree.nodes[idx].orphan = value;
    for (std::size_t c : tree.nodes[idx].children) set_orphan_flags(tree, c, value);
}

void delete_subtree(PlanTree& tree, std::size_t idx) {
    for (std::size_t c : std::vector<std::size_t>(tree.nodes[idx].children)) {
        delete_subtree(tree, c);
    }
    tree.remove_leaf(idx);
}

/// Keep descendants of `idx` whose node and parent edge stay free; delete
/// the whole branch at the first blocked node or edge.
void prune_blocked(PlanTree& tree, const Environment& env, std::size_t idx) {
    for (std::size_t c : std::vector<std::size_t>(tree.nodes[idx].children)) {
        if (env.point_free(tree.nodes[c].pos) &&
            env.segment_free(tree.nodes[idx].pos, tree.nodes[c].pos)) {
            prune_blocked(tree, env, c);
        } else {
            delete_subtree(tree, c);
        }
    }
}

void recompute_subtree_costs(PlanTree& tree, std::size_t idx) {
    TreeNode& n = tree.nodes[idx];
    if (n.parent != TreeNode::kNoParent) {
        n.cost = tree.nodes[n.parent].cost + geom::dist(tree.nodes[n.parent].pos, n.pos);
    } else {
        n.cost = 0.0;
    }
    for (std::size_t c : n.children) recompute_subtree_costs(tree, c);
}

void attach_orphan(PlanTree& tree, std::size_t host, std::size_t orphan_root) {
    tree.nodes[orphan_root].parent = host;
    tree.nodes[host].children.push_back(orphan_root);
    recompute_subtree_costs(tree, orphan_root);
    set_orphan_flags(tree, orphan_root, false);
}

}  // namespace

RepairResult sever_and_repair(PlanTree& tree, const Conflict& conflict, Environment& env,
                              double step, std::size_t regrow_budget) {
    if (tree.solution_path.empty()) {
        throw ConfigError("sever_and_repair: tree has no solution path");
    }
    if (step <= 0.0) throw ConfigError("sever_and_repair: step must be positive");

    for (const auto& r : conflict.ov_footprints) env.blocked.push_back(r);

    RepairResult res;
    const std::vector<std::size_t> old_path = tree.solution_path;
    const std::size_t goal_idx = old_path.back();

    if (!env.point_free(tree.nodes[tree.root].pos) ||
        !env.point_free(tree.nodes[goal_idx].pos)) {
        return res;  // an endpoint is inside the blocked area; no route can avoid it
    }

    // Longest valid suffix of the old path: path[s..] nodes and internal
    // edges all clear of the updated environment.
    std::size_t s = old_path.size();
    for (std::size_t k = old_path.size(); k-- > 0;) {
        bool ok = env.point_free(tree.nodes[old_path[k]].pos);
        if (ok && k + 1 < old_path.size()) {
            ok = env.segment_free(tree.nodes[old_path[k]].pos, tree.nodes[old_path[k + 1]].pos);
        }
        if (!ok) break;
        s = k;
    }

    if (s == 0) {  // the stored tree path never touched the blocked area
        res.success = true;
        res.route = route_from_path(tree, old_path);
        return res;
    }

    tree.solution_path.clear();

    // Detach the surviving solution subtree, discard every blocked branch
    // from both parts, then mark the detached part.
    const std::size_t orph = old_path[s];
    {
        auto& sibs = tree.nodes[tree.nodes[orph].parent].children;
        sibs.erase(std::remove(sibs.begin(), sibs.end(), orph), sibs.end());
        tree.nodes[orph].parent = TreeNode::kNoParent;
    }
    prune_blocked(tree, env, tree.root);
    prune_blocked(tree, env, orph);
    set_orphan_flags(tree, orph, true);

    const geom::Vec2 orph_pos = tree.nodes[orph].pos;
    const auto finish = [&](std::size_t host) {
        attach_orphan(tree, host, orph);
        tree.solution_path = path_to_root(tree, goal_idx);
        res.success = true;
        res.route = route_from_path(tree, tree.solution_path);
    };

    // Reconnect: direct free edge from the nearest surviving main-tree node.
    std::vector<std::size_t> hosts;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].alive && !tree.nodes[i].orphan) hosts.push_back(i);
    }
    std::sort(hosts.begin(), hosts.end(), [&](std::size_t l, std::size_t r) {
        return geom::dist(tree.nodes[l].pos, orph_pos) < geom::dist(tree.nodes[r].pos, orph_pos);
    });
    for (std::size_t h : hosts) {
        if (env.segment_free(tree.nodes[h].pos, orph_pos)) {
            finish(h);
            return res;
        }
    }

    // Regrow: biased growth toward the detached root until some new node
    // gains line of sight within one step.
    for (std::size_t it = 0; it < regrow_budget; ++it) {
        const auto idx = grow(tree, env, step, orph_pos, 0.2);
        if (!idx) continue;
        if (geom::dist(tree.nodes[*idx].pos, orph_pos) <= step &&
            env.segment_free(tree.nodes[*idx].pos, orph_pos)) {
            finish(*idx);
            return res;
        }
    }
    return res;
}

nlohmann::json route_geojson(const Route& route, const geo::Projection& proj) {
    nlohmann::json coords = nlohmann::json::array();
    for (const auto& wp : route.waypoints) {
        const geo::GeoPoint g = proj.to_geo(wp.pos);
        coords.push_back({g.lon, g.lat, g.alt});
    }
    return {
        {"type", "Feature"},
        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
        {"properties",
         {{"departure_time", route.departure_time},
          {"speed_bounds", {route.speed_min, route.speed_max}}}},
    };
}

std::string tree_edges_csv(const PlanTree& tree) {
    std::string out = "parent_x,parent_y,child_x,child_y\n";
    char line[160];
    for (const auto& n : tree.nodes) {
        if (!n.alive || n.parent == TreeNode::kNoParent) continue;
        const TreeNode& p = tree.nodes[n.parent];
        std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g\n", p.pos.x, p.pos.y, n.pos.x,
                      n.pos.y);
        out += line;
    }
    return out;
}

}  // namespace airlane::plan
