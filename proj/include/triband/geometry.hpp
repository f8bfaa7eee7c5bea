#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "triband/errors.hpp"

namespace triband {

// epsilon for degenerate clipping (shared edges, touching corners)
inline constexpr double kGeomEps = 1e-9;
// intersection areas below this are treated as empty
inline constexpr double kAreaEps = 1e-12;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    double r = std::remainder(a, 2.0 * M_PI);
    if (r <= -M_PI)
        r = M_PI;
    return r;
}

/// Ground-plane oriented box in the LiDAR frame. w is the lateral extent,
/// l the longitudinal extent along the heading given by yaw.
struct OrientedBevBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double l = 0.0;
    double yaw = 0.0;

    bool valid() const { return w > 0.0 && l > 0.0; }
    double area() const { return w * l; }
};

struct Box3D {
    OrientedBevBox footprint;
    double z_bottom = 0.0;
    double z_top = 0.0;

    double height() const { return z_top - z_bottom; }
    double volume() const { return footprint.area() * height(); }
};

struct ScoredBox {
    OrientedBevBox box;
    double score = 0.0;
    int class_id = 0; // 0=Car, 1=Pedestrian, 2=Cyclist
};

/// Convex polygon with a small fixed capacity; vertices counter-clockwise.
struct ConvexPolygon {
    static constexpr std::size_t kCapacity = 16;
    std::array<Vec2, kCapacity> v{};
    std::size_t n = 0;

    void push(Vec2 p) { v[n++] = p; }
    Vec2& operator[](std::size_t i) { return v[i]; }
    const Vec2& operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return n; }
};

/// Signed shoelace area; positive for counter-clockwise order.
inline double polygon_area(const ConvexPolygon& p) {
    if (p.n < 3)
        return 0.0;
    double s = 0.0;
    for (std::size_t i = 0, j = p.n - 1; i < p.n; j = i++)
        s += cross(p[j], p[i]);
    return 0.5 * s;
}

/// Area centroid. Falls back to the vertex mean for degenerate polygons.
inline Vec2 polygon_centroid(const ConvexPolygon& p) {
    if (p.n == 0)
        return {};
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0, j = p.n - 1; i < p.n; j = i++) {
        double w = cross(p[j], p[i]);
        a += w;
        cx += (p[j].x + p[i].x) * w;
        cy += (p[j].y + p[i].y) * w;
    }
    if (std::abs(a) < kAreaEps) {
        Vec2 m{};
        for (std::size_t i = 0; i < p.n; ++i)
            m = m + p[i];
        return m * (1.0 / static_cast<double>(p.n));
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

/// Corner polygon of an oriented box, counter-clockwise.
inline ConvexPolygon box_polygon(const OrientedBevBox& box) {
    const double c = std::cos(box.yaw), s = std::sin(box.yaw);
    const double hl = 0.5 * box.l, hw = 0.5 * box.w;
    ConvexPolygon p;
    const std::array<Vec2, 4> local{{{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}}};
    for (const Vec2& q : local)
        p.push({box.cx + c * q.x - s * q.y, box.cy + s * q.x + c * q.y});
    return p;
}

/// Distance-adaptive isotropic dilation: scale about the centroid by
/// s(d) = 1 + alpha * d / d_max.
inline ConvexPolygon dilate_polygon(const ConvexPolygon& poly, double d, double alpha = 2.5,
                                    double d_max = 80.0) {
    const double s = 1.0 + alpha * d / d_max;
    const Vec2 c = polygon_centroid(poly);
    ConvexPolygon out;
    for (std::size_t i = 0; i < poly.n; ++i)
        out.push(c + (poly[i] - c) * s);
    return out;
}

namespace detail {

// Sutherland-Hodgman: clip `subject` against one directed edge a->b of a
// counter-clockwise clip polygon. Points within kGeomEps of the edge count
// as inside so shared edges and touching corners survive.
inline ConvexPolygon clip_edge(const ConvexPolygon& subject, Vec2 a, Vec2 b) {
    ConvexPolygon out;
    if (subject.n == 0)
        return out;
    const Vec2 dir = b - a;
    auto side = [&](Vec2 p) { return cross(dir, p - a); };
    for (std::size_t i = 0, j = subject.n - 1; i < subject.n; j = i++) {
        const Vec2 cur = subject[i];
        const Vec2 prev = subject[j];
        const double sc = side(cur);
        const double sp = side(prev);
        const bool cur_in = sc >= -kGeomEps;
        const bool prev_in = sp >= -kGeomEps;
        if (cur_in != prev_in) {
            const double t = sp / (sp - sc);
            out.push(prev + (cur - prev) * t);
        }
        if (cur_in)
            out.push(cur);
    }
    return out;
}

} // namespace detail

/// Intersection of two convex polygons (both counter-clockwise).
inline ConvexPolygon intersect_convex(const ConvexPolygon& subject, const ConvexPolygon& clip) {
    ConvexPolygon out = subject;
    for (std::size_t i = 0, j = clip.n - 1; i < clip.n && out.n > 0; j = i++)
        out = detail::clip_edge(out, clip[j], clip[i]);
    return out;
}

inline double intersection_area(const OrientedBevBox& a, const OrientedBevBox& b) {
    const double inter = polygon_area(intersect_convex(box_polygon(a), box_polygon(b)));
    return inter < kAreaEps ? 0.0 : inter;
}

/// IoU of two oriented ground-plane boxes.
inline double rotated_iou(const OrientedBevBox& a, const OrientedBevBox& b) {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0)
        return 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0)
        return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

/// IoU of two 3D boxes: footprint intersection times vertical overlap.
inline double iou_3d(const Box3D& a, const Box3D& b) {
    const double dz = std::min(a.z_top, b.z_top) - std::max(a.z_bottom, b.z_bottom);
    if (dz <= 0.0)
        return 0.0;
    const double inter = intersection_area(a.footprint, b.footprint) * dz;
    if (inter <= 0.0)
        return 0.0;
    const double uni = a.volume() + b.volume() - inter;
    if (uni <= 0.0)
        return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

/// Greedy rotated NMS, per class: boxes are visited in descending score
/// (ties broken by input index) and removed iff their IoU with an already
/// kept box of the same class exceeds iou_thresh.
inline std::vector<ScoredBox> nms_rotated(const std::vector<ScoredBox>& dets, double iou_thresh) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<ScoredBox> kept;
    kept.reserve(dets.size());
    for (std::size_t idx : order) {
        const ScoredBox& cand = dets[idx];
        bool suppressed = false;
        for (const ScoredBox& k : kept) {
            if (k.class_id != cand.class_id)
                continue;
            if (rotated_iou(k.box, cand.box) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed)
            kept.push_back(cand);
    }
    return kept;
}

} // namespace triband
