#include "sharedspace/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sharedspace {

namespace {
constexpr double kEps = 1e-9;
}

double signed_angle(const Vec2& from, const Vec2& to) {
    return std::atan2(from.cross(to), from.dot(to));
}

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = (b - a).cross(c - a);
    if (std::abs(v) <= kEps) return 0;
    return v > 0 ? 1 : -1;
}

bool in_field_of_view(const Vec2& observer_pos, const Vec2& observer_heading,
                      const FieldOfView& fov, const Vec2& target) {
    if (observer_heading.norm_sq() <= kEps * kEps) {
        throw std::invalid_argument("in_field_of_view: zero heading vector has no orientation");
    }
    const Vec2 d = target - observer_pos;
    const double dist = d.norm();
    if (dist > fov.range + kEps) return false;
    if (dist <= kEps) return true;  // target at the observer itself
    const double angle = std::abs(signed_angle(observer_heading, d));
    return angle <= fov.half_angle + kEps;
}

namespace {

bool on_segment_collinear(const Vec2& p, const Segment& s) {
    return p.x <= std::max(s.a.x, s.b.x) + kEps && p.x + kEps >= std::min(s.a.x, s.b.x) &&
           p.y <= std::max(s.a.y, s.b.y) + kEps && p.y + kEps >= std::min(s.a.y, s.b.y);
}

}  // namespace

bool segments_intersect(const Segment& s1, const Segment& s2) {
    const int o1 = orientation(s1.a, s1.b, s2.a);
    const int o2 = orientation(s1.a, s1.b, s2.b);
    const int o3 = orientation(s2.a, s2.b, s1.a);
    const int o4 = orientation(s2.a, s2.b, s1.b);

    if (o1 != o2 && o3 != o4) return true;

    if (o1 == 0 && on_segment_collinear(s2.a, s1)) return true;
    if (o2 == 0 && on_segment_collinear(s2.b, s1)) return true;
    if (o3 == 0 && on_segment_collinear(s1.a, s2)) return true;
    if (o4 == 0 && on_segment_collinear(s1.b, s2)) return true;
    return false;
}

bool segments_properly_intersect(const Segment& s1, const Segment& s2) {
    const int o1 = orientation(s1.a, s1.b, s2.a);
    const int o2 = orientation(s1.a, s1.b, s2.b);
    const int o3 = orientation(s2.a, s2.b, s1.a);
    const int o4 = orientation(s2.a, s2.b, s1.b);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

Vec2 closest_point_on_segment(const Vec2& p, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double len_sq = d.norm_sq();
    if (len_sq <= kEps * kEps) return s.a;
    double t = (p - s.a).dot(d) / len_sq;
    t = std::clamp(t, 0.0, 1.0);
    return s.a + d * t;
}

double distance_point_segment(const Vec2& p, const Segment& s) {
    return distance(p, closest_point_on_segment(p, s));
}

Polygon Polygon::normalized(std::vector<Vec2> vertices) {
    if (vertices.size() < 3) {
        throw std::invalid_argument("polygon needs at least 3 vertices");
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % vertices.size()];
        if (distance(a, b) <= kEps) {
            throw std::invalid_argument("polygon has repeated consecutive vertices");
        }
    }
    // Reject self-intersection between non-adjacent edges.
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Segment ei{vertices[i], vertices[(i + 1) % n]};
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            const Segment ej{vertices[j], vertices[(j + 1) % n]};
            if (segments_intersect(ei, ej)) {
                throw std::invalid_argument("polygon outline is self-intersecting");
            }
        }
    }
    Polygon poly{std::move(vertices)};
    if (poly.signed_area() < 0) {
        std::reverse(poly.vertices.begin(), poly.vertices.end());
    }
    return poly;
}

double Polygon::signed_area() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % vertices.size()];
        acc += a.cross(b);
    }
    return acc / 2.0;
}

bool Polygon::on_boundary(const Vec2& p, double eps) const {
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Segment edge{vertices[i], vertices[(i + 1) % vertices.size()]};
        if (distance_point_segment(p, edge) <= eps) return true;
    }
    return false;
}

bool Polygon::contains(const Vec2& p) const {
    if (on_boundary(p)) return true;
    // Crossing-number test.
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[j];
        const bool crosses = (a.y > p.y) != (b.y > p.y);
        if (crosses) {
            const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_at) inside = !inside;
        }
    }
    return inside;
}

bool Polygon::strictly_contains(const Vec2& p) const {
    return !on_boundary(p) && contains(p);
}

double Polygon::distance_to_boundary(const Vec2& p) const {
    return distance(p, closest_boundary_point(p));
}

Vec2 Polygon::closest_boundary_point(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    Vec2 best_point = vertices.front();
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Segment edge{vertices[i], vertices[(i + 1) % vertices.size()]};
        const Vec2 q = closest_point_on_segment(p, edge);
        const double d = distance(p, q);
        if (d < best) {
            best = d;
            best_point = q;
        }
    }
    return best_point;
}

}  // namespace sharedspace
