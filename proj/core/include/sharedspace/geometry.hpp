#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace sharedspace {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// Planar vector / point in meters. Doubles throughout; coordinates are
// meter-scale, so the geometric predicates below use a fixed absolute
// epsilon.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(const Vec2& r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    friend constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }

    Vec2& operator+=(const Vec2& r) { x += r.x; y += r.y; return *this; }
    Vec2& operator-=(const Vec2& r) { x -= r.x; y -= r.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    constexpr bool operator==(const Vec2&) const = default;

    constexpr double dot(const Vec2& r) const { return x * r.x + y * r.y; }
    // z-component of the 3D cross product; positive when r lies
    // counterclockwise of *this.
    constexpr double cross(const Vec2& r) const { return x * r.y - y * r.x; }
    constexpr double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::sqrt(x * x + y * y); }

    // Unit vector in the same direction; {0,0} when the norm is <= eps.
    Vec2 normalized(double eps = 1e-12) const {
        const double n = norm();
        if (n <= eps) return {0.0, 0.0};
        return {x / n, y / n};
    }

    Vec2 rotated(double angle) const {
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        return {c * x - s * y, s * x + c * y};
    }

    // Perpendicular vector, 90 degrees counterclockwise.
    constexpr Vec2 perp() const { return {-y, x}; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Signed angle from `from` to `to` in (-pi, pi]. Zero vectors map to 0.
double signed_angle(const Vec2& from, const Vec2& to);

// Closed segment between two distinct points.
struct Segment {
    Vec2 a;
    Vec2 b;

    double length() const { return distance(a, b); }
};

// Symmetric cone of vision: half opening angle (radians) around the
// heading, limited to `range` meters. Boundaries are closed.
struct FieldOfView {
    double half_angle = deg_to_rad(85.0);
    double range = 10.0;
};

// Orientation of the ordered triple (a, b, c):
// +1 counterclockwise, -1 clockwise, 0 collinear (within epsilon).
int orientation(const Vec2& a, const Vec2& b, const Vec2& c);

// True iff target lies within range and within +/- half_angle of the
// heading (closed boundaries). Throws std::invalid_argument for a zero
// heading, which leaves the cone undefined.
bool in_field_of_view(const Vec2& observer_pos, const Vec2& observer_heading,
                      const FieldOfView& fov, const Vec2& target);

// Closed-segment intersection test. Collinear overlap and shared
// endpoints both count as intersection.
bool segments_intersect(const Segment& s1, const Segment& s2);

// Strict crossing: the segment interiors cross transversally. Touching at
// an endpoint or collinear overlap does not count.
bool segments_properly_intersect(const Segment& s1, const Segment& s2);

Vec2 closest_point_on_segment(const Vec2& p, const Segment& s);
double distance_point_segment(const Vec2& p, const Segment& s);

// Simple polygon. `normalized` validates (>=3 vertices, no repeated
// consecutive vertices, no self-intersection) and reorders to
// counterclockwise; it throws std::invalid_argument on bad input.
struct Polygon {
    std::vector<Vec2> vertices;

    static Polygon normalized(std::vector<Vec2> vertices);

    double signed_area() const;
    Vec2 edge_vertex(std::size_t i) const { return vertices[i % vertices.size()]; }
    std::size_t size() const { return vertices.size(); }

    bool contains(const Vec2& p) const;           // interior or boundary
    bool strictly_contains(const Vec2& p) const;  // interior only
    bool on_boundary(const Vec2& p, double eps = 1e-9) const;
    double distance_to_boundary(const Vec2& p) const;
    Vec2 closest_boundary_point(const Vec2& p) const;
};

}  // namespace sharedspace
