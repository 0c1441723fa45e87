#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "sharedspace/errors.hpp"
#include "sharedspace/planner.hpp"
#include "sharedspace/rng.hpp"

using namespace sharedspace;

namespace {

// Dijkstra oracle, independent of the A* implementation.
double dijkstra_length(const VisibilityGraph& graph, int start, int goal) {
    const int n = static_cast<int>(graph.nodes.size());
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                        std::greater<>> queue;
    dist[start] = 0.0;
    queue.emplace(0.0, start);
    while (!queue.empty()) {
        auto [d, node] = queue.top();
        queue.pop();
        if (d > dist[node] + 1e-12) continue;
        for (const auto& [next, len] : graph.adjacency[node]) {
            if (dist[node] + len < dist[next] - 1e-12) {
                dist[next] = dist[node] + len;
                queue.emplace(dist[next], next);
            }
        }
    }
    return dist[goal];
}

// Brute-force visibility check used as the graph-construction oracle: an
// edge must exist exactly when no obstacle blocks the open segment.
bool oracle_visible(const Vec2& a, const Vec2& b,
                    const std::vector<ObstaclePolygon>& obstacles) {
    if (distance(a, b) <= 1e-9) return false;
    for (const auto& poly : obstacles) {
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Segment edge{poly.vertices[i], poly.vertices[(i + 1) % n]};
            if (segments_properly_intersect({a, b}, edge)) return false;
        }
    }
    for (int k = 1; k < 8; ++k) {
        const Vec2 sample = a + (b - a) * (k / 8.0);
        for (const auto& poly : obstacles) {
            if (poly.strictly_contains(sample)) return false;
        }
    }
    return true;
}

std::vector<ObstaclePolygon> random_world(Rng& rng, int max_polygons) {
    std::vector<ObstaclePolygon> obstacles;
    std::vector<std::pair<Vec2, double>> placed;
    const int target = rng.uniform_int(max_polygons + 1);
    int attempts = 0;
    while (static_cast<int>(obstacles.size()) < target && attempts < 200) {
        ++attempts;
        const Vec2 center{rng.uniform(-18, 18), rng.uniform(-14, 14)};
        const double radius = rng.uniform(0.8, 2.5);
        bool clear = true;
        for (const auto& [c, r] : placed) {
            if (distance(center, c) < r + radius + 0.6) {
                clear = false;
                break;
            }
        }
        if (!clear) continue;
        const int nv = 3 + rng.uniform_int(5);
        std::vector<double> angles;
        for (int i = 0; i < nv; ++i) angles.push_back(rng.uniform(0, 2 * kPi));
        std::sort(angles.begin(), angles.end());
        bool degenerate = false;
        for (int i = 0; i < nv; ++i) {
            const double gap = (i + 1 < nv ? angles[i + 1] : angles[0] + 2 * kPi) - angles[i];
            if (gap < 0.15) degenerate = true;
        }
        if (degenerate) continue;
        std::vector<Vec2> vertices;
        for (double a : angles) {
            vertices.push_back(center + Vec2{std::cos(a), std::sin(a)} * radius);
        }
        obstacles.push_back(Polygon::normalized(std::move(vertices)));
        placed.emplace_back(center, radius);
    }
    return obstacles;
}

}  // namespace

TEST_CASE("visibility graph: empty world is a single edge") {
    const auto graph = build_visibility_graph({}, {0, 0}, {10, 0});
    CHECK(graph.nodes.size() == 2);
    REQUIRE(graph.edges.size() == 1);
    CHECK(graph.edges[0].length == doctest::Approx(10.0));
}

TEST_CASE("visibility graph: square obstacle blocks the direct edge") {
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})};
    const auto graph = build_visibility_graph(obstacles, {-5, 0}, {5, 0});

    bool direct = false;
    for (const auto& e : graph.edges) {
        if ((e.from == graph.origin_index && e.to == graph.destination_index) ||
            (e.to == graph.origin_index && e.from == graph.destination_index)) {
            direct = true;
        }
    }
    CHECK_FALSE(direct);

    // Brute-force oracle over all node pairs.
    for (int i = 0; i < static_cast<int>(graph.nodes.size()); ++i) {
        for (int j = i + 1; j < static_cast<int>(graph.nodes.size()); ++j) {
            bool has_edge = false;
            for (const auto& e : graph.edges) {
                if ((e.from == i && e.to == j) || (e.from == j && e.to == i)) has_edge = true;
            }
            CHECK(has_edge == oracle_visible(graph.nodes[i], graph.nodes[j], obstacles));
        }
    }
}

TEST_CASE("visibility graph: unobstructed destination keeps the direct edge") {
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{5, 5}, {7, 5}, {7, 7}, {5, 7}})};
    const auto graph = build_visibility_graph(obstacles, {0, 0}, {10, 0});
    bool direct = false;
    for (const auto& e : graph.edges) {
        if ((e.from == graph.origin_index && e.to == graph.destination_index) ||
            (e.to == graph.origin_index && e.from == graph.destination_index)) {
            direct = true;
        }
    }
    CHECK(direct);
}

TEST_CASE("visibility graph: endpoint inside an obstacle is an error") {
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})};
    CHECK_THROWS_AS(build_visibility_graph(obstacles, {0, 0}, {5, 0}), PlanningError);
    CHECK_THROWS_AS(build_visibility_graph(obstacles, {-5, 0}, {0, 0.5}), PlanningError);
}

TEST_CASE("plan_path: trivial two-node graph") {
    const auto graph = build_visibility_graph({}, {0, 0}, {3, 4});
    const auto path = plan_path(graph, {0, 0}, {3, 4});
    REQUIRE(path.waypoints.size() == 2);
    CHECK(path.total_length == doctest::Approx(5.0));
}

TEST_CASE("plan_path: square obstacle matches the Dijkstra oracle") {
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})};
    const auto graph = build_visibility_graph(obstacles, {-5, 0}, {5, 0});
    const auto path = plan_path(graph, {-5, 0}, {5, 0});
    const double oracle = dijkstra_length(graph, graph.origin_index, graph.destination_index);
    CHECK(path.total_length == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(path.total_length > 10.0);  // must detour
}

TEST_CASE("plan_path: symmetric detours resolve deterministically") {
    // Square centered on the straight line; both detours have equal length.
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})};
    const auto graph = build_visibility_graph(obstacles, {-5, 0}, {5, 0});
    const auto first = plan_path(graph, {-5, 0}, {5, 0});
    for (int i = 0; i < 5; ++i) {
        const auto again = plan_path(graph, {-5, 0}, {5, 0});
        REQUIRE(again.waypoints.size() == first.waypoints.size());
        for (std::size_t k = 0; k < first.waypoints.size(); ++k) {
            CHECK(again.waypoints[k] == first.waypoints[k]);
        }
    }
    // The tie-break prefers the lower-indexed corner: obstacle vertices are
    // CCW from (-1,-1), so the bottom corners (indices 0 and 1) win.
    REQUIRE(first.waypoints.size() == 4);
    CHECK(first.waypoints[1].y < 0);
}

TEST_CASE("plan_path: enclosed destination is unreachable") {
    // Destination boxed in by a ring of four slabs with no gap.
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-3, -3}, {3, -3}, {3, -2}, {-3, -2}}),
        Polygon::normalized({{-3, 2}, {3, 2}, {3, 3}, {-3, 3}}),
        Polygon::normalized({{-3, -3.5}, {-2, -3.5}, {-2, 3.5}, {-3, 3.5}}),
        Polygon::normalized({{2, -3.5}, {3, -3.5}, {3, 3.5}, {2, 3.5}})};
    const auto graph = build_visibility_graph(obstacles, {-10, 0}, {0, 0});
    CHECK_THROWS_AS(plan_path(graph, {-10, 0}, {0, 0}), PlanningError);
}

TEST_CASE("plan_path: randomized worlds match Dijkstra and avoid interiors") {
    Rng rng(777);
    for (int world = 0; world < 40; ++world) {
        const auto obstacles = random_world(rng, 8);
        const Vec2 origin{-24, rng.uniform(-10, 10)};
        const Vec2 destination{24, rng.uniform(-10, 10)};
        const auto graph = build_visibility_graph(obstacles, origin, destination);
        const auto path = plan_path(graph, origin, destination);
        const double oracle =
            dijkstra_length(graph, graph.origin_index, graph.destination_index);
        CHECK(path.total_length ==
              doctest::Approx(oracle).epsilon(1e-9));

        // No pre-offset segment may cross an obstacle interior.
        for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
            for (int k = 1; k < 16; ++k) {
                const Vec2 p = path.waypoints[i - 1] +
                               (path.waypoints[i] - path.waypoints[i - 1]) * (k / 16.0);
                for (const auto& poly : obstacles) {
                    CHECK_FALSE(poly.strictly_contains(p));
                }
            }
        }
    }
}

TEST_CASE("offset_waypoints: zero clearance is the identity") {
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})};
    const auto graph = build_visibility_graph(obstacles, {-5, 0}, {5, 0});
    const auto path = plan_path(graph, {-5, 0}, {5, 0});
    const auto same = offset_waypoints(path, obstacles, 0.0);
    REQUIRE(same.waypoints.size() == path.waypoints.size());
    for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
        CHECK(same.waypoints[i] == path.waypoints[i]);
    }
}

TEST_CASE("offset_waypoints: convex corner moves along the outward bisector") {
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}})};
    const auto graph = build_visibility_graph(obstacles, {-5, 0}, {5, 0});
    const auto path = plan_path(graph, {-5, 0}, {5, 0});
    REQUIRE(path.waypoints.size() == 4);

    const auto shifted = offset_waypoints(path, obstacles, 0.5);
    CHECK(shifted.waypoints.front() == path.waypoints.front());
    CHECK(shifted.waypoints.back() == path.waypoints.back());
    CHECK(shifted.waypoints.size() == path.waypoints.size());

    // Interior waypoints sat on the bottom corners (-1,-1) and (1,-1); the
    // outward bisector there is (-1,-1)/sqrt2 and (1,-1)/sqrt2.
    const double d = 0.5 / std::sqrt(2.0);
    CHECK(shifted.waypoints[1].x == doctest::Approx(-1 - d));
    CHECK(shifted.waypoints[1].y == doctest::Approx(-1 - d));
    CHECK(shifted.waypoints[2].x == doctest::Approx(1 + d));
    CHECK(shifted.waypoints[2].y == doctest::Approx(-1 - d));

    // Direct evaluation: displacement magnitude equals the clearance.
    CHECK(distance(shifted.waypoints[1], path.waypoints[1]) == doctest::Approx(0.5));
}

TEST_CASE("offset_waypoints: narrow corridor halves the offset") {
    // The route rounds the corner of the lower box inside a 0.25 m gap;
    // the full 0.4 m offset lands inside the upper box, so it halves.
    std::vector<ObstaclePolygon> obstacles{
        Polygon::normalized({{-4, -3}, {0, -3}, {0, 0}, {-4, 0}}),
        Polygon::normalized({{-4, 0.25}, {0.6, 0.25}, {0.6, 3}, {-4, 3}})};
    const auto graph = build_visibility_graph(obstacles, {-6, 0.125}, {4, -2});
    const auto path = plan_path(graph, {-6, 0.125}, {4, -2});
    const auto shifted = offset_waypoints(path, obstacles, 0.4);

    CHECK(shifted.waypoints.size() == path.waypoints.size());
    CHECK(shifted.waypoints.front() == path.waypoints.front());
    CHECK(shifted.waypoints.back() == path.waypoints.back());
    // Every interior waypoint stays out of both boxes (point-in-polygon
    // oracle) and no segment cuts an interior.
    for (std::size_t i = 1; i < shifted.waypoints.size(); ++i) {
        for (int k = 0; k <= 16; ++k) {
            const Vec2 p = shifted.waypoints[i - 1] +
                           (shifted.waypoints[i] - shifted.waypoints[i - 1]) * (k / 16.0);
            for (const auto& poly : obstacles) {
                CHECK_FALSE(poly.strictly_contains(p));
            }
        }
    }
    // At least one interior waypoint moved by less than the full clearance.
    bool halved = false;
    for (std::size_t i = 1; i + 1 < shifted.waypoints.size(); ++i) {
        const double moved = distance(shifted.waypoints[i], path.waypoints[i]);
        if (moved > 1e-9 && moved < 0.4 - 1e-9) halved = true;
    }
    CHECK(halved);
}
