#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "veldt/detectors.hpp"
#include "veldt/geometry.hpp"
#include "veldt/kitti.hpp"

namespace veldt {

struct ClusterParams {
    double score_threshold = 0.5;  // probability -> positive
    double max_dist = 1.0;         // single-linkage distance, meters
    int min_points = 25;           // 4 for the oracle detector
    double min_radius = 0.5;       // max horizontal distance centroid->member
};

struct Cluster {
    std::vector<int> members;         // indices into the scan
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    double height = 0.0;              // max z - min z
    double vehicleness = 0.0;         // mean member score
    double radius = 0.0;
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(b)] = a;
    }
};

}  // namespace detail

// Single-linkage euclidean grouping of positively scored points, via a voxel
// hash so only neighboring cells are compared. Clusters below the size or
// radius floor are discarded.
inline std::vector<Cluster> cluster_points(const RawScan& scan, const PointScores& scores,
                                           const ClusterParams& p = {}) {
    std::vector<int> pos;
    for (std::size_t i = 0; i < scan.points.size(); ++i)
        if (scores.score[i] >= p.score_threshold) pos.push_back(static_cast<int>(i));

    const double cell = p.max_dist;
    std::map<std::tuple<int, int, int>, std::vector<int>> grid;  // cell -> indices into pos
    auto key = [&](const LidarPoint& q) {
        return std::make_tuple(static_cast<int>(std::floor(q.x / cell)),
                               static_cast<int>(std::floor(q.y / cell)),
                               static_cast<int>(std::floor(q.z / cell)));
    };
    for (std::size_t k = 0; k < pos.size(); ++k)
        grid[key(scan.points[static_cast<std::size_t>(pos[k])])].push_back(static_cast<int>(k));

    detail::UnionFind uf(static_cast<int>(pos.size()));
    const double d2max = p.max_dist * p.max_dist;
    for (const auto& [ck, cell_pts] : grid) {
        const auto [cx, cy, cz] = ck;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto it = grid.find({cx + dx, cy + dy, cz + dz});
                    if (it == grid.end()) continue;
                    for (int a : cell_pts)
                        for (int b : it->second) {
                            if (b <= a) continue;
                            const auto& pa = scan.points[static_cast<std::size_t>(pos[static_cast<std::size_t>(a)])];
                            const auto& pb = scan.points[static_cast<std::size_t>(pos[static_cast<std::size_t>(b)])];
                            const double ddx = double(pa.x) - pb.x, ddy = double(pa.y) - pb.y,
                                         ddz = double(pa.z) - pb.z;
                            if (ddx * ddx + ddy * ddy + ddz * ddz <= d2max) uf.unite(a, b);
                        }
                }
    }

    std::map<int, std::vector<int>> groups;
    for (std::size_t k = 0; k < pos.size(); ++k)
        groups[uf.find(static_cast<int>(k))].push_back(pos[k]);

    std::vector<Cluster> out;
    for (auto& [root, members] : groups) {
        if (static_cast<int>(members.size()) < p.min_points) continue;
        Cluster c;
        c.members = members;
        double zmin = 1e300, zmax = -1e300, vsum = 0;
        for (int i : members) {
            const auto& q = scan.points[static_cast<std::size_t>(i)];
            c.centroid += Eigen::Vector3d(q.x, q.y, q.z);
            zmin = std::min(zmin, double(q.z));
            zmax = std::max(zmax, double(q.z));
            vsum += scores.score[static_cast<std::size_t>(i)];
        }
        c.centroid /= double(members.size());
        c.height = zmax - zmin;
        c.vehicleness = vsum / double(members.size());
        for (int i : members) {
            const auto& q = scan.points[static_cast<std::size_t>(i)];
            c.radius = std::max(c.radius, std::hypot(q.x - c.centroid.x(), q.y - c.centroid.y()));
        }
        if (c.radius < p.min_radius) continue;
        out.push_back(std::move(c));
    }
    return out;
}

// Sensor-facing silhouette: ground-projected members binned by azimuth, one
// nearest point per bin.
struct PerimeterPoint {
    double x = 0, y = 0;
    double range = 0;        // ground-plane range
    double azimuth = 0;      // radians
};

struct PerimeterProfile {
    std::vector<PerimeterPoint> pts;  // ordered by azimuth bin
};

inline PerimeterProfile perimeter(const RawScan& scan, const Cluster& cluster,
                                  double bin_deg = 0.18) {
    std::map<int, PerimeterPoint> bins;
    for (int i : cluster.members) {
        const auto& q = scan.points[static_cast<std::size_t>(i)];
        const double az = std::atan2(double(q.y), double(q.x));
        const double r = std::hypot(double(q.x), double(q.y));
        const int bin = static_cast<int>(std::floor(rad2deg(az) / bin_deg));
        auto it = bins.find(bin);
        if (it == bins.end() || r < it->second.range)
            bins[bin] = {double(q.x), double(q.y), r, az};
    }
    PerimeterProfile prof;
    prof.pts.reserve(bins.size());
    for (auto& [bin, pt] : bins) prof.pts.push_back(pt);
    return prof;
}

// Tracker observation: an oriented rectangle anchored at the corner nearest
// the sensor. extent_sign_* give the direction the body extends from the
// anchor along the box axes.
struct BoxObservation {
    double x = 0, y = 0;       // anchor corner, sensor frame
    double theta = 0;          // box axis, (-pi/4, pi/4]
    double width = 0, length = 0;  // across / along the box axis
    double height = 0;
    double vehicleness = 0;
    double fit_mse = 0;
    double c = 0;              // orientation-noise factor
    bool corner_identified = false;
    int extent_sign_x = 1;
    int extent_sign_y = 1;

    RectBEV footprint() const {
        const Vec2 center =
            Vec2{x, y} + rotate({0.5 * extent_sign_x * length, 0.5 * extent_sign_y * width}, theta);
        return {center.x, center.y, theta, length, width};
    }
};

struct BoxFitParams {
    double sweep_step_deg = 1.0;
    double corner_margin = 0.15;      // band around a side for support counting
    double corner_min_extent = 0.3;   // minimum observed extent per side
    int corner_min_points = 2;
    double k_c = 100.0;               // orientation-noise tuning factor
};

// Dynamically scaled orientation confidence from the fit residual and the
// rectangle dimensions.
inline double orientation_noise(double fit_mse, double w, double l, double k = 100.0) {
    const double dim = w + l;
    if (dim <= 0.0) throw std::invalid_argument("orientation_noise: w + l must be positive");
    return k * fit_mse / (dim * dim);
}

namespace detail {

// Range of the silhouette-edge point nearest a missing ray. Using the point
// nearest the ray (not the sensor) keeps the sweep score continuous when a
// ray grazes a rectangle corner and floating point flips it to a miss.
inline double nearest_edge_range(const Vec2& dir, double xmin, double xmax, double ymin,
                                 double ymax) {
    const Vec2 corners[4] = {{xmin, ymin}, {xmax, ymin}, {xmax, ymax}, {xmin, ymax}};
    const double dn = std::hypot(dir.x, dir.y);
    const Vec2 d{dir.x / dn, dir.y / dn};
    auto ray_dist = [&](const Vec2& q) {
        const double along = q.dot(d);
        if (along <= 0.0) return q.norm();
        return std::abs(q.x * d.y - q.y * d.x);
    };
    double best_dist = 1e300, best_range = 0.0;
    for (int e = 0; e < 4; ++e) {
        const Vec2 a = corners[e];
        const Vec2 b = corners[(e + 1) % 4];
        const Vec2 ab = b - a;
        // candidates: endpoints plus the parameter where the edge runs
        // parallel-projected onto the ray (perpendicular distance extremum)
        double cands[3] = {0.0, 1.0, -1.0};
        const double denom = ab.x * d.y - ab.y * d.x;
        if (std::abs(denom) > 1e-15) cands[2] = -(a.x * d.y - a.y * d.x) / denom;
        for (double s : cands) {
            if (s < 0.0 || s > 1.0) continue;
            const Vec2 q = a + ab * s;
            const double dist = ray_dist(q);
            if (dist < best_dist) {
                best_dist = dist;
                best_range = q.norm();
            }
        }
    }
    return best_range;
}

// Entry distance of the ray t*dir (t >= 0) into an axis-aligned rectangle;
// on a miss, the range of the silhouette edge nearest the ray.
inline double ray_rect_range(const Vec2& dir, double xmin, double xmax, double ymin, double ymax) {
    double t0 = 0.0, t1 = 1e300;
    bool miss = false;
    auto slab = [&](double d, double lo, double hi) {
        if (std::abs(d) < 1e-12) {
            if (0.0 < lo || 0.0 > hi) miss = true;
            return;
        }
        double ta = lo / d, tb = hi / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    };
    slab(dir.x, xmin, xmax);
    slab(dir.y, ymin, ymax);
    if (!miss && t0 <= t1) return t0;
    return nearest_edge_range(dir, xmin, xmax, ymin, ymax);
}

}  // namespace detail

struct BoxFitResult {
    BoxObservation obs;
    bool degenerate = false;
};

// Angular sweep: for each candidate orientation build the minimal enclosing
// rectangle of the profile in the rotated frame, cast rays from the sensor at
// the profile azimuths against it, and keep the orientation whose simulated
// ranges best match the real ones (ties prefer the smaller |angle|).
inline BoxFitResult fit_box(const PerimeterProfile& profile, const BoxFitParams& p = {}) {
    BoxFitResult res;
    BoxObservation& obs = res.obs;

    const std::size_t n = profile.pts.size();
    if (n < 2) {
        res.degenerate = true;
        obs.theta = 0.0;
        if (n == 1) {
            obs.x = profile.pts[0].x;
            obs.y = profile.pts[0].y;
        }
        obs.corner_identified = false;
        return res;
    }

    // Candidates ordered by |angle| so the first strict minimum wins ties.
    std::vector<double> cands;
    for (double a = 0.0; a <= 45.0 + 1e-9; a += p.sweep_step_deg) {
        cands.push_back(a);
        const double neg = -a;
        if (neg > -45.0 && a != 0.0) cands.push_back(neg);  // -45 excluded: same box as +45
    }

    double best_mse = 1e300, best_theta = 0.0;
    double best_xmin = 0, best_xmax = 0, best_ymin = 0, best_ymax = 0;
    for (double a_deg : cands) {
        const double theta = deg2rad(a_deg);
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& pt : profile.pts) {
            const Vec2 q = rotate({pt.x, pt.y}, -theta);
            xmin = std::min(xmin, q.x);
            xmax = std::max(xmax, q.x);
            ymin = std::min(ymin, q.y);
            ymax = std::max(ymax, q.y);
        }
        double sq = 0.0;
        for (const auto& pt : profile.pts) {
            const Vec2 dir = rotate({std::cos(pt.azimuth), std::sin(pt.azimuth)}, -theta);
            const double rv = detail::ray_rect_range(dir, xmin, xmax, ymin, ymax);
            sq += (pt.range - rv) * (pt.range - rv);
        }
        const double mse = sq / double(n);
        if (mse < best_mse) {
            best_mse = mse;
            best_theta = theta;
            best_xmin = xmin;
            best_xmax = xmax;
            best_ymin = ymin;
            best_ymax = ymax;
        }
    }

    obs.theta = best_theta;
    obs.fit_mse = best_mse;
    obs.length = best_xmax - best_xmin;
    obs.width = best_ymax - best_ymin;

    // Anchor at the rectangle corner nearest the sensor.
    const double cx[2] = {best_xmin, best_xmax};
    const double cy[2] = {best_ymin, best_ymax};
    double best_d = 1e300;
    int ax = 0, ay = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double d = std::hypot(cx[i], cy[j]);
            if (d < best_d) {
                best_d = d;
                ax = i;
                ay = j;
            }
        }
    const Vec2 anchor_world = rotate({cx[ax], cy[ay]}, best_theta);
    obs.x = anchor_world.x;
    obs.y = anchor_world.y;
    obs.extent_sign_x = ax == 0 ? 1 : -1;
    obs.extent_sign_y = ay == 0 ? 1 : -1;

    // Corner visibility: both sides adjacent to the anchor need support.
    int nx = 0, ny = 0;
    double sx_min = 1e300, sx_max = -1e300, sy_min = 1e300, sy_max = -1e300;
    for (const auto& pt : profile.pts) {
        const Vec2 q = rotate({pt.x, pt.y}, -best_theta);
        if (std::abs(q.y - cy[ay]) <= p.corner_margin) {
            ++nx;
            sx_min = std::min(sx_min, q.x);
            sx_max = std::max(sx_max, q.x);
        }
        if (std::abs(q.x - cx[ax]) <= p.corner_margin) {
            ++ny;
            sy_min = std::min(sy_min, q.y);
            sy_max = std::max(sy_max, q.y);
        }
    }
    obs.corner_identified = nx >= p.corner_min_points && ny >= p.corner_min_points &&
                            (sx_max - sx_min) >= p.corner_min_extent &&
                            (sy_max - sy_min) >= p.corner_min_extent;
    return res;
}

// Full per-frame observation extraction.
inline std::vector<BoxObservation> extract_observations(const RawScan& scan,
                                                        const PointScores& scores,
                                                        const ClusterParams& cp,
                                                        const BoxFitParams& bp = {},
                                                        double bin_deg = 0.18) {
    std::vector<BoxObservation> out;
    for (const Cluster& c : cluster_points(scan, scores, cp)) {
        const PerimeterProfile prof = perimeter(scan, c, bin_deg);
        BoxFitResult fit = fit_box(prof, bp);
        if (fit.degenerate) continue;
        fit.obs.height = c.height;
        fit.obs.vehicleness = c.vehicleness;
        fit.obs.c = orientation_noise(fit.obs.fit_mse, fit.obs.width, fit.obs.length, bp.k_c);
        out.push_back(fit.obs);
    }
    return out;
}

// Re-express an anchored box so both extents point in the positive axis
// directions (rotating the box frame by quarter turns); used by the CSV dumps
// so a row fully determines the rectangle.
struct CanonicalBox {
    double x = 0, y = 0, theta = 0, length = 0, width = 0;
};

inline CanonicalBox canonicalize_box(double x, double y, double theta, double length, double width,
                                     int sign_x, int sign_y) {
    CanonicalBox b{x, y, theta, length, width};
    int sx = sign_x, sy = sign_y;
    for (int k = 0; k < 3 && !(sx > 0 && sy > 0); ++k) {
        const int nsx = sy, nsy = -sx;
        std::swap(b.length, b.width);
        sx = nsx;
        sy = nsy;
        b.theta = wrap_angle(b.theta + 0.5 * kPi);
    }
    return b;
}

}  // namespace veldt
