#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "veldt/kitti.hpp"
#include "veldt/net.hpp"
#include "veldt/range_image.hpp"

namespace veldt {

enum class DetectorKind { Geometric, Net, Oracle };

inline const char* detector_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::Geometric: return "geometric";
        case DetectorKind::Net: return "net";
        default: return "oracle";
    }
}

inline DetectorKind parse_detector(const std::string& s) {
    if (s == "geometric") return DetectorKind::Geometric;
    if (s == "net") return DetectorKind::Net;
    if (s == "oracle") return DetectorKind::Oracle;
    throw std::runtime_error("unknown detector: " + s + " (expected geometric|net|oracle)");
}

// Per-point vehicle score aligned with a scan.
struct PointScores {
    std::vector<float> score;
    DetectorKind tag = DetectorKind::Oracle;
};

struct GroundRemovalParams {
    double tolerance = 0.2;        // inlier distance to the plane, meters
    int iterations = 500;
    double max_tilt_deg = 15.0;    // plane normal within this angle of vertical
    double min_inlier_fraction = 0.15;  // below this support no plane is accepted
};

// Dominant near-horizontal plane by randomized consensus. Returns a mask with
// 1 for ground inliers; all zeros when no acceptable plane is found. Seeded
// for determinism; the inlier set is invariant to yaw rotations of the scene.
inline std::vector<uint8_t> remove_ground(const RawScan& scan, const GroundRemovalParams& p = {},
                                          uint64_t seed = 1) {
    const std::size_t n = scan.points.size();
    std::vector<uint8_t> mask(n, 0);
    if (n < 3) return mask;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const double min_nz = std::cos(deg2rad(p.max_tilt_deg));

    double best_n[3] = {0, 0, 0}, best_d = 0;
    std::size_t best_count = 0;
    for (int it = 0; it < p.iterations; ++it) {
        const std::size_t i0 = pick(rng), i1 = pick(rng), i2 = pick(rng);
        if (i0 == i1 || i1 == i2 || i0 == i2) continue;
        const auto& a = scan.points[i0];
        const auto& b = scan.points[i1];
        const auto& c = scan.points[i2];
        const double u[3] = {double(b.x) - a.x, double(b.y) - a.y, double(b.z) - a.z};
        const double v[3] = {double(c.x) - a.x, double(c.y) - a.y, double(c.z) - a.z};
        double nx = u[1] * v[2] - u[2] * v[1];
        double ny = u[2] * v[0] - u[0] * v[2];
        double nz = u[0] * v[1] - u[1] * v[0];
        const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (norm < 1e-12) continue;
        nx /= norm;
        ny /= norm;
        nz /= norm;
        if (std::abs(nz) < min_nz) continue;  // not near-horizontal
        const double d = -(nx * a.x + ny * a.y + nz * a.z);
        std::size_t count = 0;
        for (const auto& q : scan.points)
            if (std::abs(nx * q.x + ny * q.y + nz * q.z + d) <= p.tolerance) ++count;
        if (count > best_count) {
            best_count = count;
            best_n[0] = nx;
            best_n[1] = ny;
            best_n[2] = nz;
            best_d = d;
        }
    }

    if (best_count < static_cast<std::size_t>(p.min_inlier_fraction * double(n))) return mask;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& q = scan.points[i];
        if (std::abs(best_n[0] * q.x + best_n[1] * q.y + best_n[2] * q.z + best_d) <= p.tolerance)
            mask[i] = 1;
    }
    return mask;
}

// Baseline detector: everything that survives ground removal counts as a
// candidate. Cluster vehicleness is uninformative, so track creation is gated
// on an identified corner downstream.
inline PointScores geometric_scores(const RawScan& scan, const GroundRemovalParams& p = {},
                                    uint64_t seed = 1) {
    PointScores s;
    s.tag = DetectorKind::Geometric;
    const std::vector<uint8_t> ground = remove_ground(scan, p, seed);
    s.score.resize(scan.points.size());
    for (std::size_t i = 0; i < s.score.size(); ++i) s.score[i] = ground[i] ? 0.f : 1.f;
    return s;
}

// Upper-bound detector: ground-truth boxes stand in for perfect predictions.
inline PointScores oracle_scores(const RawScan& scan, const std::vector<LabelBox3D>& frame_boxes) {
    PointScores s;
    s.tag = DetectorKind::Oracle;
    const std::vector<uint8_t> classes = label_points(scan, frame_boxes);
    s.score.resize(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i)
        s.score[i] = classes[i] == kClassVehicle ? 1.f : 0.f;
    return s;
}

// Learned detector: project, classify per pixel, push scores back onto the
// points that won their pixels. Points absent from the image score 0.
inline PointScores net_scores(const RawScan& scan, NetParams<float>& params,
                              const ProjectionGeometry& geom = {}) {
    PointScores s;
    s.tag = DetectorKind::Net;
    s.score.assign(scan.points.size(), 0.f);
    const RangeImage img = project(scan, geom);
    const std::vector<float> probs = net_predict(params, img);
    for (const ScoredPoint& sp : unproject(img, scan, probs))
        s.score[static_cast<std::size_t>(sp.point_index)] = sp.score;
    return s;
}

}  // namespace veldt
