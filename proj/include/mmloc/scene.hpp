// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"
#include "mmloc/geometry.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mmloc {

struct UeGrid {
    Point2D origin;
    int rows = 1;
    int cols = 1;
    double spacing = 1.0;
};

/// A static 2D world: transmitters, convex obstacles and a receiver grid.
struct Scene {
    std::vector<Point2D> base_stations;
    std::vector<Polygon> obstacles;
    UeGrid ue_grid;
    double carrier_frequency_hz = 28e9;
    double bandwidth_hz = 500e6;
    double tx_power_dbm = 0.0;
    int max_reflection_order = 2;
    double reflection_loss_db = 6.0;
};

/// A propagation path from a base station to a user. Interior vertices are
/// specular reflection points on obstacle edges.
struct RayPath {
    std::vector<Point2D> vertices;
    double length_m = 0.0;
    int bounce_count = 0;

    friend bool operator==(const RayPath&, const RayPath&) = default;
};

struct GridPoint {
    int user_id = 0;
    Point2D position;
};

inline constexpr int kMaxReflectionOrder = 3;

/// Throws ConfigError when any Scene invariant is violated.
inline void validate(const Scene& scene) {
    const auto& g = scene.ue_grid;
    if (!(g.spacing > 0.0))
        throw ConfigError("ue_grid.spacing must be positive");
    if (g.rows < 1 || g.cols < 1)
        throw ConfigError("ue_grid rows and cols must be >= 1");
    if (!(scene.carrier_frequency_hz > 0.0))
        throw ConfigError("carrier_frequency_hz must be positive");
    if (!(scene.bandwidth_hz > 0.0))
        throw ConfigError("bandwidth_hz must be positive");
    if (scene.max_reflection_order < 0)
        throw ConfigError("max_reflection_order must be non-negative");
    if (!(scene.reflection_loss_db >= 0.0))
        throw ConfigError("reflection_loss_db must be non-negative");
    for (std::size_t i = 0; i < scene.obstacles.size(); ++i)
        if (!is_convex_ccw(scene.obstacles[i]))
            throw ConfigError("obstacle " + std::to_string(i) +
                              " is not a convex counter-clockwise polygon with positive area");
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            const Point2D p{g.origin.x + c * g.spacing, g.origin.y + r * g.spacing};
            for (const auto& poly : scene.obstacles)
                if (strictly_inside(p, poly))
                    throw ConfigError("ue grid point (" + std::to_string(p.x) + ", " +
                                      std::to_string(p.y) + ") lies inside an obstacle");
        }
}

/// Row-major grid; user_id is the 0-based row-major index.
inline std::vector<GridPoint> build_grid(const Scene& scene) {
    const auto& g = scene.ue_grid;
    if (!(g.spacing > 0.0) || g.rows < 1 || g.cols < 1)
        throw ConfigError("invalid ue_grid");
    std::vector<GridPoint> points;
    points.reserve(static_cast<std::size_t>(g.rows) * static_cast<std::size_t>(g.cols));
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c)
            points.push_back({r * g.cols + c, {g.origin.x + c * g.spacing, g.origin.y + r * g.spacing}});
    return points;
}

namespace detail {

inline void check_endpoints(const Scene& scene, Point2D bs, Point2D ue) {
    if (distance(bs, ue) <= kGeomTol)
        throw GeometryError("base station and user coincide");
    for (const auto& poly : scene.obstacles)
        if (strictly_inside(bs, poly) || strictly_inside(ue, poly))
            throw GeometryError("endpoint lies inside an obstacle");
}

struct EdgeRef {
    std::size_t obstacle;
    std::size_t edge;
    Point2D a;
    Point2D b;
};

inline std::vector<EdgeRef> collect_edges(const Scene& scene) {
    std::vector<EdgeRef> edges;
    for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
        const auto& poly = scene.obstacles[o];
        for (std::size_t e = 0; e < poly.size(); ++e)
            edges.push_back({o, e, poly[e], poly[(e + 1) % poly.size()]});
    }
    return edges;
}

// A segment endpoint that sits on an obstacle edge (a reflection point).
struct Host {
    const EdgeRef* edge = nullptr;
};

// Open segment must stay clear of every obstacle. An endpoint resting on an edge
// is allowed only if the rest of the segment lies strictly on that edge's outer side.
inline bool segment_clear(const Scene& scene, Point2D p, Host hp, Point2D q, Host hq) {
    if (distance(p, q) <= kGeomTol)
        return false;
    for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
        const bool p_on = hp.edge && hp.edge->obstacle == o;
        const bool q_on = hq.edge && hq.edge->obstacle == o;
        if (p_on && q_on)
            return false; // chord of a convex polygon
        if (p_on) {
            if (outward_distance(q, hp.edge->a, hp.edge->b) <= kGeomTol)
                return false;
        } else if (q_on) {
            if (outward_distance(p, hq.edge->a, hq.edge->b) <= kGeomTol)
                return false;
        } else if (segment_hits_polygon(p, q, scene.obstacles[o])) {
            return false;
        }
    }
    return true;
}

// Intersection of the ray from `from` toward `to` with edge a-b. Returns the point
// only when it lies on the edge away from its end vertices and strictly between
// from and to.
inline std::optional<Point2D> hit_on_edge(Point2D from, Point2D to, Point2D a, Point2D b) {
    const Point2D r = to - from;
    const Point2D s = b - a;
    const double denom = cross(r, s);
    if (std::abs(denom) <= 1e-15 * norm(r) * norm(s))
        return std::nullopt;
    const double t = cross(a - from, s) / denom; // along from->to
    const double u = cross(a - from, r) / denom; // along a->b
    const double edge_len = norm(s);
    if (u * edge_len <= kGeomTol || (1.0 - u) * edge_len <= kGeomTol)
        return std::nullopt;
    if (t <= 0.0 || t >= 1.0)
        return std::nullopt;
    return a + u * s;
}

inline double path_length(const std::vector<Point2D>& v) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        len += distance(v[i], v[i + 1]);
    return len;
}

inline std::optional<RayPath> reflected_path(const Scene& scene, Point2D bs, Point2D ue,
                                             const std::vector<const EdgeRef*>& sequence) {
    const std::size_t n = sequence.size();
    std::vector<Point2D> images(n + 1);
    images[0] = bs;
    for (std::size_t i = 0; i < n; ++i) {
        const auto* e = sequence[i];
        if (std::abs(outward_distance(images[i], e->a, e->b)) <= kGeomTol)
            return std::nullopt;
        images[i + 1] = reflect_across_line(images[i], e->a, e->b);
    }

    std::vector<Point2D> vertices(n + 2);
    vertices[0] = bs;
    vertices[n + 1] = ue;
    Point2D target = ue;
    for (std::size_t i = n; i >= 1; --i) {
        const auto* e = sequence[i - 1];
        const auto hit = hit_on_edge(images[i], target, e->a, e->b);
        if (!hit)
            return std::nullopt;
        vertices[i] = *hit;
        target = *hit;
    }

    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        const Host hp{i == 0 ? nullptr : sequence[i - 1]};
        const Host hq{i + 1 == n + 1 ? nullptr : sequence[i]};
        if (!segment_clear(scene, vertices[i], hp, vertices[i + 1], hq))
            return std::nullopt;
    }
    const double len = path_length(vertices);
    return RayPath{std::move(vertices), len, static_cast<int>(n)};
}

inline void enumerate(const Scene& scene, Point2D bs, Point2D ue, const std::vector<EdgeRef>& edges,
                      std::vector<const EdgeRef*>& sequence, int remaining, std::vector<RayPath>& out) {
    if (remaining == 0)
        return;
    for (const auto& e : edges) {
        if (!sequence.empty() && sequence.back() == &e)
            continue;
        sequence.push_back(&e);
        if (auto p = reflected_path(scene, bs, ue, sequence))
            out.push_back(std::move(*p));
        enumerate(scene, bs, ue, edges, sequence, remaining - 1, out);
        sequence.pop_back();
    }
}

} // namespace detail

/// True iff the segment bs->ue meets no obstacle; grazing a vertex or running
/// along an edge counts as blocked.
inline bool is_los(const Scene& scene, Point2D bs, Point2D ue) {
    detail::check_endpoints(scene, bs, ue);
    return std::none_of(scene.obstacles.begin(), scene.obstacles.end(),
                        [&](const Polygon& poly) { return segment_hits_polygon(bs, ue, poly); });
}

/// Direct path (when unobstructed) plus every specular reflection path with at
/// most `scene.max_reflection_order` bounces, by the image method. Sorted by
/// length, ties broken by lexicographic vertex order.
inline std::vector<RayPath> trace_paths(const Scene& scene, Point2D bs, Point2D ue) {
    if (scene.max_reflection_order < 0 || scene.max_reflection_order > kMaxReflectionOrder)
        throw ConfigError("max_reflection_order must be within [0, " +
                          std::to_string(kMaxReflectionOrder) + "]");
    detail::check_endpoints(scene, bs, ue);

    std::vector<RayPath> paths;
    if (is_los(scene, bs, ue))
        paths.push_back({{bs, ue}, distance(bs, ue), 0});

    const auto edges = detail::collect_edges(scene);
    std::vector<const detail::EdgeRef*> sequence;
    detail::enumerate(scene, bs, ue, edges, sequence, scene.max_reflection_order, paths);

    std::sort(paths.begin(), paths.end(), [](const RayPath& a, const RayPath& b) {
        if (a.length_m != b.length_m)
            return a.length_m < b.length_m;
        return std::lexicographical_compare(a.vertices.begin(), a.vertices.end(), b.vertices.begin(),
                                            b.vertices.end());
    });
    return paths;
}

/// Diagonal of the axis-aligned box holding every BS, obstacle vertex and grid point.
inline double bounding_diagonal(const Scene& scene) {
    std::vector<Point2D> pts(scene.base_stations);
    for (const auto& poly : scene.obstacles)
        pts.insert(pts.end(), poly.begin(), poly.end());
    const auto& g = scene.ue_grid;
    pts.push_back(g.origin);
    pts.push_back({g.origin.x + (g.cols - 1) * g.spacing, g.origin.y + (g.rows - 1) * g.spacing});
    double lo_x = pts[0].x, hi_x = pts[0].x, lo_y = pts[0].y, hi_y = pts[0].y;
    for (const auto& p : pts) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    return std::hypot(hi_x - lo_x, hi_y - lo_y);
}

} // namespace mmloc
