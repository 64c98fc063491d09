#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "veldt/geometry.hpp"
#include "veldt/kitti.hpp"

namespace veldt {

// Synthetic urban scenes in KITTI tracking layout: a ground plane, vehicles
// with unicycle motion sampled on their sensor-facing sides, and L-shaped
// wall clutter. Deterministic for a given seed. The sensor sits at the
// origin; everything is generated inside the labeled front sector.

struct SynthVehicle {
    double x = 10, y = 0, theta = 0;  // initial pose, world frame
    double v = 0, rho = 0;            // unicycle motion
    double length = 4.2, width = 1.8, height = 1.6;
    int target_points = 0;            // 0: dense by spacing; else approximate count
    ObjectClass cls = ObjectClass::Car;
    int first_frame = 0;
    int last_frame = 1 << 30;

    Pose2 pose_at(int frame, double dt) const {
        Pose2 p{x, y, theta};
        for (int k = 0; k < frame; ++k) {
            p.x += v * std::cos(p.theta) * dt;
            p.y += v * std::sin(p.theta) * dt;
            p.theta = wrap_angle(p.theta + v * rho * dt);
        }
        return p;
    }
};

// Two perpendicular wall segments meeting at a corner (building edge).
struct SynthWall {
    double x = 15, y = -8;
    double angle1 = 0, angle2 = 0.5 * kPi;
    double len1 = 3, len2 = 3;
    double height = 2.0;
};

struct SynthScene {
    int frames = 40;
    double dt = 0.1;
    double ground_z = -1.73;
    bool ground = true;
    double ground_spacing = 0.4;
    double ground_x_max = 42.0;
    double noise_sigma = 0.015;
    uint64_t seed = 1;
    std::vector<SynthVehicle> vehicles;
    std::vector<SynthWall> walls;
};

namespace detail {

inline bool in_front_sector(double x, double y, double max_range = 75.0) {
    const double az = rad2deg(std::atan2(y, x));
    const double r = std::hypot(x, y);
    return az >= -40.0 && az <= 40.0 && r > 1.5 && r < max_range;
}

inline void push_point(RawScan& scan, double x, double y, double z, double refl,
                       std::mt19937_64& rng, double sigma) {
    std::normal_distribution<double> n(0.0, sigma);
    x += n(rng);
    y += n(rng);
    z += n(rng);
    if (!in_front_sector(x, y)) return;
    scan.points.push_back({static_cast<float>(x), static_cast<float>(y), static_cast<float>(z),
                           static_cast<float>(refl)});
}

// Sample the sensor-facing vertical sides of a box footprint.
inline void sample_box_sides(RawScan& scan, const Pose2& pose, double l, double w, double z0,
                             double h, double spacing, double z_step, double refl,
                             std::mt19937_64& rng, double sigma) {
    const Vec2 ax{std::cos(pose.theta), std::sin(pose.theta)};
    const Vec2 ay{-ax.y, ax.x};
    const Vec2 c{pose.x, pose.y};
    struct Side {
        Vec2 center, dir, normal;
        double len;
    };
    const Side sides[4] = {
        {c + ax * (0.5 * l), ay, ax, w},
        {c - ax * (0.5 * l), ay, ax * -1.0, w},
        {c + ay * (0.5 * w), ax, ay, l},
        {c - ay * (0.5 * w), ax, ay * -1.0, l},
    };
    for (const Side& s : sides) {
        if (s.center.dot(s.normal) >= 0.0) continue;  // back face
        const int nu = std::max(2, static_cast<int>(s.len / spacing));
        for (int i = 0; i <= nu; ++i) {
            const double t = -0.5 * s.len + s.len * double(i) / double(nu);
            const Vec2 p = s.center + s.dir * t;
            for (double z = z0 + 0.35; z <= z0 + h - 0.05; z += z_step)
                push_point(scan, p.x, p.y, z, refl, rng, sigma);
        }
    }
}

// Sparse variant: a fixed point budget spread over the two visible sides,
// still covering their full extents so a box fit stays meaningful.
inline void sample_box_sparse(RawScan& scan, const Pose2& pose, double l, double w, double z0,
                              double h, int target, double refl, std::mt19937_64& rng,
                              double sigma) {
    const Vec2 ax{std::cos(pose.theta), std::sin(pose.theta)};
    const Vec2 ay{-ax.y, ax.x};
    const Vec2 c{pose.x, pose.y};
    struct Side {
        Vec2 center, dir, normal;
        double len;
    };
    const Side all[4] = {
        {c + ax * (0.5 * l), ay, ax, w},
        {c - ax * (0.5 * l), ay, ax * -1.0, w},
        {c + ay * (0.5 * w), ax, ay, l},
        {c - ay * (0.5 * w), ax, ay * -1.0, l},
    };
    std::vector<Side> visible;
    for (const Side& s : all)
        if (s.center.dot(s.normal) < 0.0) visible.push_back(s);
    if (visible.empty()) return;
    const int per_side = std::max(2, target / static_cast<int>(visible.size()));
    const double z = z0 + 0.5 * h;
    for (const Side& s : visible)
        for (int i = 0; i < per_side; ++i) {
            const double t = -0.5 * s.len + s.len * double(i) / double(per_side - 1);
            const Vec2 p = s.center + s.dir * t;
            push_point(scan, p.x, p.y, z, refl, rng, sigma);
        }
}

inline void sample_wall(RawScan& scan, const SynthWall& wl, double z0, std::mt19937_64& rng,
                        double sigma) {
    auto segment = [&](double angle, double len) {
        const Vec2 dir{std::cos(angle), std::sin(angle)};
        const int nu = std::max(2, static_cast<int>(len / 0.15));
        for (int i = 0; i <= nu; ++i) {
            const Vec2 p = Vec2{wl.x, wl.y} + dir * (len * double(i) / double(nu));
            for (double z = z0 + 0.3; z <= z0 + wl.height; z += 0.35)
                push_point(scan, p.x, p.y, z, 0.5, rng, sigma);
        }
    };
    segment(wl.angle1, wl.len1);
    segment(wl.angle2, wl.len2);
}

}  // namespace detail

inline RawScan render_scene_frame(const SynthScene& scene, int frame) {
    std::mt19937_64 rng(scene.seed * 1000003ull + static_cast<uint64_t>(frame));
    RawScan scan;
    scan.frame_index = frame;

    if (scene.ground) {
        for (double x = 2.0; x <= scene.ground_x_max; x += scene.ground_spacing) {
            const double ymax = x * std::tan(deg2rad(40.0));
            for (double y = -ymax; y <= ymax; y += scene.ground_spacing)
                detail::push_point(scan, x, y, scene.ground_z, 0.25, rng, 0.02);
        }
    }
    for (const SynthWall& w : scene.walls) detail::sample_wall(scan, w, scene.ground_z, rng, scene.noise_sigma);
    for (const SynthVehicle& v : scene.vehicles) {
        if (frame < v.first_frame || frame > v.last_frame) continue;
        const Pose2 p = v.pose_at(frame, scene.dt);
        if (v.target_points > 0)
            detail::sample_box_sparse(scan, p, v.length, v.width, scene.ground_z, v.height,
                                      v.target_points, 0.75, rng, 0.01);
        else
            detail::sample_box_sides(scan, p, v.length, v.width, scene.ground_z, v.height, 0.12,
                                     0.3, 0.75, rng, scene.noise_sigma);
    }
    return scan;
}

inline std::vector<LabelBox3D> scene_labels_frame(const SynthScene& scene, int frame) {
    std::vector<LabelBox3D> out;
    for (std::size_t i = 0; i < scene.vehicles.size(); ++i) {
        const SynthVehicle& v = scene.vehicles[i];
        if (frame < v.first_frame || frame > v.last_frame) continue;
        const Pose2 p = v.pose_at(frame, scene.dt);
        if (!detail::in_front_sector(p.x, p.y)) continue;
        LabelBox3D b;
        b.frame_index = frame;
        b.track_id = static_cast<int>(i);
        b.cls = v.cls;
        b.center = {p.x, p.y, scene.ground_z + 0.5 * v.height};
        b.height = v.height;
        b.width = v.width;
        b.length = v.length;
        b.yaw = p.theta;
        out.push_back(b);
    }
    return out;
}

// Conventional camera mount: x right, y down, z forward.
inline Calibration synth_calibration() {
    Calibration c;
    c.velo_to_cam_rot << 0, -1, 0, 0, 0, -1, 1, 0, 0;
    c.velo_to_cam_trans = {0.0, -0.08, -0.27};
    return c;
}

// KITTI tracking layout: <root>/velodyne/<seq>/%06d.bin, <root>/label_02/<seq>.txt,
// <root>/calib/<seq>.txt.
inline void write_synth_sequence(const std::string& root, const std::string& seq,
                                 const SynthScene& scene) {
    namespace fs = std::filesystem;
    const fs::path base(root);
    fs::create_directories(base / "velodyne" / seq);
    fs::create_directories(base / "label_02");
    fs::create_directories(base / "calib");

    const Calibration calib = synth_calibration();
    write_calib((base / "calib" / (seq + ".txt")).string(), calib);

    std::vector<LabelBox3D> all_labels;
    for (int f = 0; f < scene.frames; ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "%06d.bin", f);
        write_scan((base / "velodyne" / seq / name).string(), render_scene_frame(scene, f));
        for (const auto& b : scene_labels_frame(scene, f)) all_labels.push_back(b);
    }
    write_labels((base / "label_02" / (seq + ".txt")).string(), all_labels, calib);
}

// Benchmark-style scene: two well-observed vehicles, two sparse ones below
// the default cluster size floor, and wall corners that only the geometric
// detector mistakes for vehicles.
inline SynthScene make_benchmark_scene(uint64_t seed, int frames = 40) {
    SynthScene s;
    s.frames = frames;
    s.seed = seed;

    SynthVehicle cruiser;
    cruiser.x = 8.0;
    cruiser.y = -4.5;
    cruiser.theta = deg2rad(12.0);
    cruiser.v = 6.0;
    s.vehicles.push_back(cruiser);

    SynthVehicle turner;
    turner.x = 14.0;
    turner.y = 5.0;
    turner.theta = deg2rad(-18.0);
    turner.v = 4.0;
    turner.rho = 0.035;
    turner.cls = ObjectClass::Van;
    turner.length = 4.6;
    turner.width = 1.9;
    turner.height = 2.0;
    s.vehicles.push_back(turner);

    SynthVehicle parked_far;
    parked_far.x = 30.0;
    parked_far.y = -7.0;
    parked_far.theta = deg2rad(25.0);
    parked_far.target_points = 14;
    s.vehicles.push_back(parked_far);

    SynthVehicle slow_far;
    slow_far.x = 32.0;
    slow_far.y = 9.0;
    slow_far.theta = deg2rad(-160.0);
    slow_far.v = 1.5;
    slow_far.target_points = 16;
    s.vehicles.push_back(slow_far);

    // Wall corners pointed at the sensor so both faces are visible and the
    // junction anchors the fitted box.
    auto corner_wall = [](double x, double y, double l1, double l2, double h) {
        const double radial = std::atan2(y, x);
        return SynthWall{x, y, radial + 0.25 * kPi, radial - 0.25 * kPi, l1, l2, h};
    };
    s.walls.push_back(corner_wall(18.0, -12.0, 3.0, 3.0, 2.2));
    s.walls.push_back(corner_wall(26.0, 12.0, 2.6, 3.2, 2.0));
    return s;
}

}  // namespace veldt
