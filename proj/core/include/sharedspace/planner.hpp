#pragma once

#include <span>
#include <vector>

#include "sharedspace/geometry.hpp"

namespace sharedspace {

// Static obstacle outline (building, tree bed, ...). Counterclockwise
// simple polygon after Polygon::normalized.
using ObstaclePolygon = Polygon;

// Graph of mutually visible points: all obstacle outline vertices plus one
// origin/destination pair. Edges never cut through an obstacle interior;
// grazing a corner or running along an outline edge is allowed.
struct VisibilityGraph {
    struct Edge {
        int from = -1;
        int to = -1;
        double length = 0.0;
    };

    std::vector<Vec2> nodes;
    std::vector<Edge> edges;
    std::vector<std::vector<std::pair<int, double>>> adjacency;  // node -> (neighbor, length)
    int origin_index = -1;
    int destination_index = -1;
};

struct WaypointPath {
    std::vector<Vec2> waypoints;
    double total_length = 0.0;

    bool empty() const { return waypoints.empty(); }
};

// True iff the open segment a-b neither crosses an obstacle outline
// transversally nor passes through an obstacle interior.
bool segment_clear_of_obstacles(const Vec2& a, const Vec2& b,
                                std::span<const ObstaclePolygon> obstacles);

// Builds the shared visibility graph for one origin/destination pair.
// Throws PlanningError when an endpoint lies strictly inside an obstacle.
VisibilityGraph build_visibility_graph(std::span<const ObstaclePolygon> obstacles,
                                       const Vec2& origin, const Vec2& destination);

// Minimum-length path via A* with straight-line heuristic. Ties resolve
// lexicographically on (f-cost, h-cost, node index); equal-cost parents
// resolve to the lower node index. Throws PlanningError when origin or
// destination is not a graph node or no path exists.
WaypointPath plan_path(const VisibilityGraph& graph, const Vec2& origin, const Vec2& destination);

// Pushes interior waypoints that sit on obstacle vertices `clearance`
// meters outward along the vertex's exterior angle bisector. Endpoints
// never move. Offsets that would drive a path segment into an obstacle
// interior are halved until valid (falling back to the original vertex).
WaypointPath offset_waypoints(const WaypointPath& path,
                              std::span<const ObstaclePolygon> obstacles, double clearance);

double path_length(std::span<const Vec2> waypoints);

}  // namespace sharedspace
