#include "sharedspace/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "sharedspace/errors.hpp"

namespace sharedspace {

namespace {

constexpr double kEps = 1e-9;

bool point_strictly_inside_any(const Vec2& p, std::span<const ObstaclePolygon> obstacles) {
    for (const auto& poly : obstacles) {
        if (poly.strictly_contains(p)) return true;
    }
    return false;
}

}  // namespace

double path_length(std::span<const Vec2> waypoints) {
    double total = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        total += distance(waypoints[i - 1], waypoints[i]);
    }
    return total;
}

bool segment_clear_of_obstacles(const Vec2& a, const Vec2& b,
                                std::span<const ObstaclePolygon> obstacles) {
    const Segment candidate{a, b};
    for (const auto& poly : obstacles) {
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Segment edge{poly.vertices[i], poly.vertices[(i + 1) % n]};
            if (segments_properly_intersect(candidate, edge)) return false;
        }
    }
    // Transversal crossings are excluded above; what remains either stays
    // on one side of every outline or passes through vertices. Interior
    // samples catch diagonals and through-vertex cuts.
    for (int k = 1; k < 8; ++k) {
        const Vec2 sample = a + (b - a) * (static_cast<double>(k) / 8.0);
        if (point_strictly_inside_any(sample, obstacles)) return false;
    }
    return true;
}

VisibilityGraph build_visibility_graph(std::span<const ObstaclePolygon> obstacles,
                                       const Vec2& origin, const Vec2& destination) {
    if (point_strictly_inside_any(origin, obstacles)) {
        throw PlanningError("visibility graph: origin lies inside an obstacle");
    }
    if (point_strictly_inside_any(destination, obstacles)) {
        throw PlanningError("visibility graph: destination lies inside an obstacle");
    }

    VisibilityGraph graph;
    for (const auto& poly : obstacles) {
        for (const auto& v : poly.vertices) graph.nodes.push_back(v);
    }
    graph.origin_index = static_cast<int>(graph.nodes.size());
    graph.nodes.push_back(origin);
    graph.destination_index = static_cast<int>(graph.nodes.size());
    graph.nodes.push_back(destination);

    const int n = static_cast<int>(graph.nodes.size());
    graph.adjacency.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Vec2& a = graph.nodes[i];
            const Vec2& b = graph.nodes[j];
            if (distance(a, b) <= kEps) continue;
            if (!segment_clear_of_obstacles(a, b, obstacles)) continue;
            const double len = distance(a, b);
            graph.edges.push_back({i, j, len});
            graph.adjacency[i].emplace_back(j, len);
            graph.adjacency[j].emplace_back(i, len);
        }
    }
    return graph;
}

namespace {

int find_node(const VisibilityGraph& graph, const Vec2& p) {
    for (int i = 0; i < static_cast<int>(graph.nodes.size()); ++i) {
        if (distance(graph.nodes[i], p) <= kEps) return i;
    }
    return -1;
}

}  // namespace

WaypointPath plan_path(const VisibilityGraph& graph, const Vec2& origin, const Vec2& destination) {
    const int start = find_node(graph, origin);
    const int goal = find_node(graph, destination);
    if (start < 0 || goal < 0) {
        throw PlanningError("plan_path: origin/destination is not a graph node");
    }

    const int n = static_cast<int>(graph.nodes.size());
    std::vector<double> g(n, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n, -1);
    std::vector<char> closed(n, 0);

    auto heuristic = [&](int i) { return distance(graph.nodes[i], graph.nodes[goal]); };

    // (f, h, node); the tuple ordering is the documented tie-break.
    using QueueEntry = std::tuple<double, double, int>;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;

    g[start] = 0.0;
    open.emplace(heuristic(start), heuristic(start), start);

    while (!open.empty()) {
        const auto [f, h, node] = open.top();
        open.pop();
        if (closed[node]) continue;
        closed[node] = 1;
        if (node == goal) break;
        for (const auto& [next, len] : graph.adjacency[node]) {
            const double tentative = g[node] + len;
            if (tentative < g[next] - kEps) {
                g[next] = tentative;
                parent[next] = node;
                open.emplace(tentative + heuristic(next), heuristic(next), next);
            } else if (std::abs(tentative - g[next]) <= kEps && parent[next] >= 0 &&
                       node < parent[next]) {
                // Equal-cost alternative: prefer the lower-index parent so
                // symmetric detours resolve the same way on every run.
                parent[next] = node;
            }
        }
    }

    if (!closed[goal] && !std::isfinite(g[goal])) {
        throw PlanningError("plan_path: destination unreachable");
    }

    std::vector<Vec2> waypoints;
    for (int at = goal; at != -1; at = parent[at]) {
        waypoints.push_back(graph.nodes[at]);
        if (at == start) break;
    }
    std::reverse(waypoints.begin(), waypoints.end());
    if (waypoints.empty() || distance(waypoints.front(), graph.nodes[start]) > kEps) {
        throw PlanningError("plan_path: destination unreachable");
    }

    WaypointPath path;
    path.waypoints = std::move(waypoints);
    path.total_length = path_length(path.waypoints);
    return path;
}

namespace {

// Direction that leaves the polygon at vertex `idx`: the bisector of the
// two incident edges, flipped outward if needed.
Vec2 exterior_bisector(const Polygon& poly, std::size_t idx) {
    const std::size_t n = poly.size();
    const Vec2& v = poly.vertices[idx];
    const Vec2& prev = poly.vertices[(idx + n - 1) % n];
    const Vec2& next = poly.vertices[(idx + 1) % n];
    Vec2 dir = ((prev - v).normalized() + (next - v).normalized());
    if (dir.norm() <= 1e-9) {
        // Degenerate straight corner; use the edge normal instead.
        dir = (next - v).normalized().perp();
    }
    dir = dir.normalized();
    const Vec2 probe = v + dir * 1e-3;
    if (poly.contains(probe)) dir = -dir;
    return dir;
}

bool segment_valid(const Vec2& a, const Vec2& b, std::span<const ObstaclePolygon> obstacles) {
    if (distance(a, b) <= kEps) return true;
    return segment_clear_of_obstacles(a, b, obstacles);
}

// Halve the applied offset; snap back to the original vertex once the
// remaining offset is negligible.
Vec2 halve_offset(const Vec2& original, const Vec2& current) {
    const Vec2 halved = original + (current - original) * 0.5;
    return distance(halved, original) <= 1e-6 ? original : halved;
}

}  // namespace

WaypointPath offset_waypoints(const WaypointPath& path,
                              std::span<const ObstaclePolygon> obstacles, double clearance) {
    if (clearance <= 0.0 || path.waypoints.size() <= 2) {
        return path;
    }

    std::vector<Vec2> out = path.waypoints;
    for (std::size_t i = 1; i + 1 < out.size(); ++i) {
        const Vec2 original = path.waypoints[i];

        // Locate the obstacle vertex this waypoint sits on.
        const Polygon* owner = nullptr;
        std::size_t vertex_idx = 0;
        for (const auto& poly : obstacles) {
            for (std::size_t k = 0; k < poly.size(); ++k) {
                if (distance(poly.vertices[k], original) <= kEps) {
                    owner = &poly;
                    vertex_idx = k;
                    break;
                }
            }
            if (owner) break;
        }
        if (!owner) continue;

        const Vec2 dir = exterior_bisector(*owner, vertex_idx);
        double offset = clearance;
        bool placed = false;
        while (offset > 1e-6) {
            const Vec2 candidate = original + dir * offset;
            if (!point_strictly_inside_any(candidate, obstacles) &&
                segment_valid(out[i - 1], candidate, obstacles) &&
                segment_valid(candidate, path.waypoints[i + 1], obstacles)) {
                out[i] = candidate;
                placed = true;
                break;
            }
            offset /= 2.0;
        }
        if (!placed) out[i] = original;  // degenerate corridor: keep the vertex
    }

    // A later offset can invalidate the segment checked against the
    // original neighbor; verify the final polyline and back out offsets
    // pairwise where needed.
    for (int pass = 0; pass < 30; ++pass) {
        bool dirty = false;
        for (std::size_t i = 0; i + 1 < out.size(); ++i) {
            if (!segment_valid(out[i], out[i + 1], obstacles)) {
                if (i > 0) out[i] = halve_offset(path.waypoints[i], out[i]);
                if (i + 1 < out.size() - 1) {
                    out[i + 1] = halve_offset(path.waypoints[i + 1], out[i + 1]);
                }
                dirty = true;
            }
        }
        if (!dirty) break;
    }

    WaypointPath result;
    result.waypoints = std::move(out);
    result.total_length = path_length(result.waypoints);
    return result;
}

}  // namespace sharedspace
