// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <span>
#include <vector>

namespace mmloc {

/// Absolute tolerance (meters) for point-on-edge and occlusion tests.
inline constexpr double kGeomTol = 1e-9;

struct Point2D {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point2D operator*(double s, Point2D a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Point2D, Point2D) = default;
    friend constexpr auto operator<=>(Point2D, Point2D) = default;
};

using Polygon = std::vector<Point2D>;

constexpr double dot(Point2D a, Point2D b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2D a, Point2D b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2D a) { return std::hypot(a.x, a.y); }
inline double distance(Point2D a, Point2D b) { return norm(b - a); }

/// Signed area; positive for counter-clockwise vertex order.
inline double signed_area(std::span<const Point2D> poly) {
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        twice += cross(poly[i], poly[(i + 1) % poly.size()]);
    return 0.5 * twice;
}

/// Strictly convex and counter-clockwise.
inline bool is_convex_ccw(std::span<const Point2D> poly) {
    if (poly.size() < 3)
        return false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2D a = poly[i];
        const Point2D b = poly[(i + 1) % poly.size()];
        const Point2D c = poly[(i + 2) % poly.size()];
        if (cross(b - a, c - b) <= 0.0)
            return false;
    }
    return signed_area(poly) > 0.0;
}

inline double point_segment_distance(Point2D p, Point2D a, Point2D b) {
    const Point2D ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0)
        return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

/// True when the closed segments come within `tol` of each other.
inline bool segments_touch(Point2D p1, Point2D p2, Point2D q1, Point2D q2, double tol = kGeomTol) {
    const double d1 = cross(p2 - p1, q1 - p1);
    const double d2 = cross(p2 - p1, q2 - p1);
    const double d3 = cross(q2 - q1, p1 - q1);
    const double d4 = cross(q2 - q1, p2 - q1);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    return std::min({point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2),
                     point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2)}) <= tol;
}

/// Signed distance from `p` to the supporting line of edge a->b; positive on the
/// right-hand side, which is the outside of a counter-clockwise polygon.
inline double outward_distance(Point2D p, Point2D a, Point2D b) {
    return cross(p - a, b - a) / distance(a, b);
}

/// Strictly inside a convex counter-clockwise polygon (farther than `tol` from every edge).
inline bool strictly_inside(Point2D p, std::span<const Point2D> poly, double tol = kGeomTol) {
    for (std::size_t i = 0; i < poly.size(); ++i)
        if (outward_distance(p, poly[i], poly[(i + 1) % poly.size()]) > -tol)
            return false;
    return true;
}

/// Closed segment meets the closed convex polygon (touching counts).
inline bool segment_hits_polygon(Point2D p, Point2D q, std::span<const Point2D> poly,
                                 double tol = kGeomTol) {
    if (strictly_inside(p, poly, -tol) || strictly_inside(q, poly, -tol))
        return true;
    for (std::size_t i = 0; i < poly.size(); ++i)
        if (segments_touch(p, q, poly[i], poly[(i + 1) % poly.size()], tol))
            return true;
    return false;
}

/// Mirror image of `p` across the infinite line through a and b.
inline Point2D reflect_across_line(Point2D p, Point2D a, Point2D b) {
    const Point2D d = b - a;
    const double t = dot(p - a, d) / dot(d, d);
    const Point2D foot = a + t * d;
    return foot + (-1.0) * (p - foot);
}

} // namespace mmloc
