#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace veldt {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

// Wrap into (-pi/4, pi/4]: the equivalence class of a rectangle orientation,
// which is only observable modulo a quarter turn.
inline double wrap_quarter(double a) {
    a = std::remainder(a, 0.5 * kPi);
    if (a <= -0.25 * kPi) a += 0.5 * kPi;
    return a;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// A 2D rigid pose (position + heading).
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 position() const { return {x, y}; }

    // Compose: this pose followed by `local` expressed in this frame.
    Pose2 compose(const Pose2& local) const {
        const Vec2 p = rotate(local.position(), theta);
        return {x + p.x, y + p.y, wrap_angle(theta + local.theta)};
    }

    // Express `other` in this pose's frame (subtractive composition).
    Pose2 inverse_compose(const Pose2& other) const {
        const Vec2 d = rotate({other.x - x, other.y - y}, -theta);
        return {d.x, d.y, wrap_angle(other.theta - theta)};
    }
};

// Ground-plane rectangle given by center, heading and extents.
struct RectBEV {
    double cx = 0.0;
    double cy = 0.0;
    double yaw = 0.0;
    double length = 0.0;  // extent along the heading axis
    double width = 0.0;   // extent across it

    // Counter-clockwise, as required by the polygon clipper.
    std::array<Vec2, 4> corners() const {
        const Vec2 ax = {std::cos(yaw), std::sin(yaw)};
        const Vec2 ay = {-ax.y, ax.x};
        const Vec2 c = {cx, cy};
        const Vec2 hl = ax * (0.5 * length);
        const Vec2 hw = ay * (0.5 * width);
        return {c + hl + hw, c - hl + hw, c - hl - hw, c + hl - hw};
    }

    double area() const { return length * width; }
};

namespace detail {

inline double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of a convex polygon against the half-plane left of (a,b).
inline std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
    std::vector<Vec2> out;
    const size_t n = poly.size();
    auto side = [&](const Vec2& p) {
        return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    };
    for (size_t i = 0; i < n; ++i) {
        const Vec2& cur = poly[i];
        const Vec2& nxt = poly[(i + 1) % n];
        const double sc = side(cur), sn = side(nxt);
        if (sc >= 0.0) out.push_back(cur);
        if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
            const double t = sc / (sc - sn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

}  // namespace detail

// Intersection area of two convex polygons.
inline double convex_intersection_area(const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
    std::vector<Vec2> poly = p;
    const size_t n = q.size();
    for (size_t i = 0; i < n && !poly.empty(); ++i)
        poly = detail::clip_halfplane(poly, q[i], q[(i + 1) % n]);
    if (poly.size() < 3) return 0.0;
    return detail::polygon_area(poly);
}

inline double bev_iou(const RectBEV& a, const RectBEV& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const std::vector<Vec2> pa(ca.begin(), ca.end());
    const std::vector<Vec2> pb(cb.begin(), cb.end());
    const double inter = convex_intersection_area(pa, pb);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace veldt
