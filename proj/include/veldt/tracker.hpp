#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "veldt/cluster_box.hpp"
#include "veldt/geometry.hpp"
#include "veldt/kitti.hpp"

namespace veldt {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec3m = Eigen::Vector3d;
using Mat3m = Eigen::Matrix3d;
using Mat35 = Eigen::Matrix<double, 3, 5>;

// State: world position of the tracked corner, heading, speed along the
// heading, inverse curvature radius (angular velocity = v * rho).
struct TrackState {
    double x = 0, y = 0, theta = 0, v = 0, rho = 0;

    Vec5 vec() const { return (Vec5() << x, y, theta, v, rho).finished(); }
    static TrackState from(const Vec5& s) { return {s(0), s(1), s(2), s(3), s(4)}; }
    Pose2 pose() const { return {x, y, theta}; }
};

struct TrackerNoise {
    double sigma_wv = 0.5;    // process, speed (per sqrt s)
    double sigma_wrho = 0.01; // process, curvature
    double sigma_xy = 0.9;    // measurement, corner position
    double c_min = 0.05;      // floor on the orientation-noise factor
    double init_sigma[5] = {2.0, 2.0, 0.5 * kPi, 20.0, 0.2};
    double prune_tau = 0.001;
    double gate_maha2 = 9.21;  // chi-square, 2 dof, 99%
    int max_misses = 5;
    double dims_alpha = 0.3;   // EMA weight for observed box dimensions
};

// One EKF over a motion hypothesis. The box frame of the hypothesis may be a
// quarter turn off the observation frame (dims_swapped); the extent signs say
// which way the body stretches from the tracked corner.
struct Hypothesis {
    Vec5 x = Vec5::Zero();
    Mat5 P = Mat5::Zero();
    double weight = 1.0;
    bool dims_swapped = false;
    int along_sign = 1;
    int across_sign = 1;
};

struct Track {
    int id = -1;
    std::vector<Hypothesis> hyps;
    double dim_w = 0, dim_l = 0, dim_h = 0;  // smoothed, observation-frame convention
    double vehicleness = 0;
    int age = 0;
    int hits = 0;
    int misses = 0;
    bool alive = true;

    const Hypothesis& leader() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < hyps.size(); ++i)
            if (hyps[i].weight > hyps[best].weight) best = i;
        return hyps[best];
    }
};

// ---------------------------------------------------------------------------
// Motion model

inline Vec5 motion_apply(const Vec5& s, double dt) {
    Vec5 out = s;
    const double th = s(2);  // pre-update heading drives the translation
    out(0) += s(3) * std::cos(th) * dt;
    out(1) += s(3) * std::sin(th) * dt;
    out(2) = wrap_angle(s(2) + s(3) * s(4) * dt);
    return out;
}

inline Mat5 motion_jacobian(const Vec5& s, double dt) {
    Mat5 F = Mat5::Identity();
    const double th = s(2), v = s(3), rho = s(4);
    F(0, 2) = -v * std::sin(th) * dt;
    F(0, 3) = std::cos(th) * dt;
    F(1, 2) = v * std::cos(th) * dt;
    F(1, 3) = std::sin(th) * dt;
    F(2, 3) = rho * dt;
    F(2, 4) = v * dt;
    return F;
}

inline void ekf_predict(Hypothesis& h, double dt, const TrackerNoise& noise) {
    const Mat5 F = motion_jacobian(h.x, dt);
    h.x = motion_apply(h.x, dt);
    h.P = F * h.P * F.transpose();
    h.P(3, 3) += noise.sigma_wv * noise.sigma_wv * dt;
    h.P(4, 4) += noise.sigma_wrho * noise.sigma_wrho * dt;
    h.P = 0.5 * (h.P + h.P.transpose()).eval();
}

// ---------------------------------------------------------------------------
// Measurement model: the tracked pose expressed in the sensor frame,
// composed through the ego pose and the sensor mount.

inline Vec3m measure(const Vec5& s, const Pose2& ego, const Pose2& mount) {
    const Pose2 sensor = ego.compose(mount);
    const Pose2 y = sensor.inverse_compose({s(0), s(1), s(2)});
    return {y.x, y.y, y.theta};
}

inline Mat35 measure_jacobian(const Vec5&, const Pose2& ego, const Pose2& mount) {
    Mat35 H = Mat35::Zero();
    const double a = ego.theta + mount.theta;
    H(0, 0) = std::cos(a);
    H(0, 1) = std::sin(a);
    H(1, 0) = -std::sin(a);
    H(1, 1) = std::cos(a);
    H(2, 2) = 1.0;
    return H;
}

inline Mat3m measurement_noise(double c, const TrackerNoise& noise) {
    Mat3m R = Mat3m::Zero();
    R(0, 0) = noise.sigma_xy * noise.sigma_xy;
    R(1, 1) = noise.sigma_xy * noise.sigma_xy;
    const double st = std::max(c, noise.c_min) * 0.5 * kPi;
    R(2, 2) = st * st;
    return R;
}

// ---------------------------------------------------------------------------
// Track lifecycle

// Two hypotheses per new box: motion along the box axis and across it, with
// the across frame a quarter turn ahead (so its along-extent is the observed
// width).
inline Track init_track(int id, const BoxObservation& obs, const Pose2& ego, const Pose2& mount,
                        const TrackerNoise& noise) {
    Track t;
    t.id = id;
    t.dim_w = obs.width;
    t.dim_l = obs.length;
    t.dim_h = obs.height;
    t.vehicleness = obs.vehicleness;
    t.hits = 1;

    const Pose2 world = ego.compose(mount).compose({obs.x, obs.y, obs.theta});
    Mat5 P0 = Mat5::Zero();
    for (int i = 0; i < 5; ++i) P0(i, i) = noise.init_sigma[i] * noise.init_sigma[i];

    Hypothesis along;
    along.x << world.x, world.y, world.theta, 0.0, 0.0;
    along.P = P0;
    along.weight = 0.5;
    along.dims_swapped = false;
    along.along_sign = obs.extent_sign_x;
    along.across_sign = obs.extent_sign_y;

    Hypothesis across = along;
    across.x(2) = wrap_angle(world.theta + 0.5 * kPi);
    across.dims_swapped = true;
    across.along_sign = obs.extent_sign_y;
    across.across_sign = -obs.extent_sign_x;

    t.hyps = {along, across};
    return t;
}

struct UpdateResult {
    bool ok = true;  // false when an innovation covariance is not invertible
};

// Joseph-form EKF update per hypothesis plus likelihood reweighting. The
// orientation innovation is folded into (-pi/4, pi/4]: a fitted rectangle
// cannot tell along from across, so the angle carries information only
// modulo a quarter turn.
inline UpdateResult update_track(Track& t, const BoxObservation& obs, const Pose2& ego,
                                 const Pose2& mount, const TrackerNoise& noise) {
    const Vec3m y(obs.x, obs.y, obs.theta);
    const Mat3m R = measurement_noise(obs.c, noise);
    std::vector<double> lambdas(t.hyps.size(), 0.0);

    for (std::size_t i = 0; i < t.hyps.size(); ++i) {
        Hypothesis& h = t.hyps[i];
        const Vec3m yhat = measure(h.x, ego, mount);
        const Mat35 H = measure_jacobian(h.x, ego, mount);
        Vec3m z = y - yhat;
        z(2) = wrap_quarter(z(2));
        const Mat3m Z = H * h.P * H.transpose() + R;
        Eigen::LLT<Mat3m> llt(Z);
        if (llt.info() != Eigen::Success) return {false};
        const Vec3m zi = llt.solve(z);
        lambdas[i] = std::exp(-0.5 * z.dot(zi));
        const Eigen::Matrix<double, 5, 3> K = h.P * H.transpose() * llt.solve(Mat3m::Identity());
        h.x += K * z;
        h.x(2) = wrap_angle(h.x(2));
        const Mat5 IKH = Mat5::Identity() - K * H;
        h.P = IKH * h.P * IKH.transpose() + K * R * K.transpose();
        h.P = 0.5 * (h.P + h.P.transpose()).eval();
    }

    double wsum = 0.0;
    for (std::size_t i = 0; i < t.hyps.size(); ++i) {
        t.hyps[i].weight *= lambdas[i];
        wsum += t.hyps[i].weight;
    }
    if (wsum > 0.0) {
        for (auto& h : t.hyps) h.weight /= wsum;
    } else {
        // all likelihoods underflowed; keep the prior
        const double uniform = 1.0 / double(t.hyps.size());
        for (auto& h : t.hyps) h.weight = uniform;
    }

    t.dim_w += noise.dims_alpha * (obs.width - t.dim_w);
    t.dim_l += noise.dims_alpha * (obs.length - t.dim_l);
    t.dim_h += noise.dims_alpha * (obs.height - t.dim_h);
    t.vehicleness = obs.vehicleness;
    return {true};
}

inline void prune_track(Track& t, double tau) {
    std::vector<Hypothesis> kept;
    for (auto& h : t.hyps)
        if (h.weight >= tau) kept.push_back(h);
    if (kept.empty()) {
        t.alive = false;
        t.hyps.clear();
        return;
    }
    double wsum = 0.0;
    for (auto& h : kept) wsum += h.weight;
    for (auto& h : kept) h.weight /= wsum;
    t.hyps = std::move(kept);
}

// ---------------------------------------------------------------------------
// Corner bookkeeping

// Physical corner k in {0,1}^2 of a hypothesis' rectangle, world frame.
// Indices are given in the observation-frame convention; a swapped hypothesis
// addresses the same physical corner with the indices transposed.
inline Vec2 hypothesis_corner(const Hypothesis& h, double dim_w, double dim_l, int ix, int iy) {
    const int lix = h.dims_swapped ? iy : ix;
    const int liy = h.dims_swapped ? ix : iy;
    const double along = h.dims_swapped ? dim_w : dim_l;
    const double across = h.dims_swapped ? dim_l : dim_w;
    const Vec2 local{lix * h.along_sign * along, liy * h.across_sign * across};
    const Vec2 off = rotate(local, h.x(2));
    return {h.x(0) + off.x, h.x(1) + off.y};
}

// When the anchored corner goes out of sight the detector reports a different
// rectangle corner; translate every hypothesis to it and leave the rest of
// the state untouched.
inline bool switch_corner(Track& t, const BoxObservation& obs, const Pose2& ego,
                          const Pose2& mount) {
    const Pose2 sensor = ego.compose(mount);
    const Pose2 obs_world = sensor.compose({obs.x, obs.y, 0.0});
    const Vec2 target{obs_world.x, obs_world.y};

    const Hypothesis& lead = t.leader();
    int best_ix = 0, best_iy = 0;
    double best_d = 1e300;
    for (int ix = 0; ix < 2; ++ix)
        for (int iy = 0; iy < 2; ++iy) {
            const Vec2 c = hypothesis_corner(lead, t.dim_w, t.dim_l, ix, iy);
            const double d = (c - target).norm();
            if (d < best_d) {
                best_d = d;
                best_ix = ix;
                best_iy = iy;
            }
        }
    if (best_ix == 0 && best_iy == 0) return false;

    for (auto& h : t.hyps) {
        const Vec2 c = hypothesis_corner(h, t.dim_w, t.dim_l, best_ix, best_iy);
        h.x(0) = c.x;
        h.x(1) = c.y;
        const int lix = h.dims_swapped ? best_iy : best_ix;
        const int liy = h.dims_swapped ? best_ix : best_iy;
        if (lix) h.along_sign = -h.along_sign;
        if (liy) h.across_sign = -h.across_sign;
    }
    return true;
}

// World-frame footprint of a track, from its leading hypothesis.
inline RectBEV track_footprint(const Track& t) {
    const Hypothesis& h = t.leader();
    const double along = h.dims_swapped ? t.dim_w : t.dim_l;
    const double across = h.dims_swapped ? t.dim_l : t.dim_w;
    const Vec2 center = Vec2{h.x(0), h.x(1)} +
                        rotate({0.5 * h.along_sign * along, 0.5 * h.across_sign * across}, h.x(2));
    return {center.x, center.y, h.x(2), along, across};
}

// Canonical anchored-box form for the CSV dump.
inline CanonicalBox track_canonical_box(const Track& t) {
    const Hypothesis& h = t.leader();
    const double along = h.dims_swapped ? t.dim_w : t.dim_l;
    const double across = h.dims_swapped ? t.dim_l : t.dim_w;
    return canonicalize_box(h.x(0), h.x(1), h.x(2), along, across, h.along_sign, h.across_sign);
}

// ---------------------------------------------------------------------------
// Association: greedy nearest neighbor between predicted corners and observed
// ones, gated by Mahalanobis distance on the position block.

struct Association {
    std::vector<std::pair<int, int>> matches;  // (track index, observation index)
    std::vector<int> unmatched_tracks;
    std::vector<int> unmatched_observations;
};

inline Association associate(const std::vector<Track>& tracks,
                             const std::vector<BoxObservation>& observations, const Pose2& ego,
                             const Pose2& mount, const TrackerNoise& noise) {
    struct Pair {
        double dist;
        int ti, oi;
    };
    std::vector<Pair> pairs;
    for (int ti = 0; ti < static_cast<int>(tracks.size()); ++ti) {
        const Track& t = tracks[static_cast<std::size_t>(ti)];
        if (!t.alive) continue;
        Vec2 mean{0, 0};
        for (const auto& h : t.hyps) {
            const Vec3m yh = measure(h.x, ego, mount);
            mean.x += h.weight * yh(0);
            mean.y += h.weight * yh(1);
        }
        const Hypothesis& lead = t.leader();
        const Mat35 H = measure_jacobian(lead.x, ego, mount);
        const Mat3m Z = H * lead.P * H.transpose() + measurement_noise(0.0, noise);
        const Eigen::Matrix2d Zp = Z.topLeftCorner<2, 2>();
        const Eigen::Matrix2d Zp_inv = Zp.inverse();
        for (int oi = 0; oi < static_cast<int>(observations.size()); ++oi) {
            const auto& o = observations[static_cast<std::size_t>(oi)];
            const Eigen::Vector2d z(o.x - mean.x, o.y - mean.y);
            const double maha2 = z.dot(Zp_inv * z);
            if (maha2 > noise.gate_maha2) continue;
            pairs.push_back({z.norm(), ti, oi});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.ti != b.ti) return a.ti < b.ti;
        return a.oi < b.oi;
    });

    Association out;
    std::vector<bool> t_used(tracks.size(), false), o_used(observations.size(), false);
    for (const auto& pr : pairs) {
        if (t_used[static_cast<std::size_t>(pr.ti)] || o_used[static_cast<std::size_t>(pr.oi)]) continue;
        t_used[static_cast<std::size_t>(pr.ti)] = true;
        o_used[static_cast<std::size_t>(pr.oi)] = true;
        out.matches.push_back({pr.ti, pr.oi});
    }
    for (int ti = 0; ti < static_cast<int>(tracks.size()); ++ti)
        if (tracks[static_cast<std::size_t>(ti)].alive && !t_used[static_cast<std::size_t>(ti)])
            out.unmatched_tracks.push_back(ti);
    for (int oi = 0; oi < static_cast<int>(observations.size()); ++oi)
        if (!o_used[static_cast<std::size_t>(oi)]) out.unmatched_observations.push_back(oi);
    return out;
}

// ---------------------------------------------------------------------------
// Frame-sequential multi-object tracker.

class MultiTracker {
public:
    MultiTracker(const TrackerNoise& noise, const Pose2& mount, bool require_corner)
        : noise_(noise), mount_(mount), require_corner_(require_corner) {}

    void step(const std::vector<BoxObservation>& observations, const Pose2& ego, double dt) {
        for (auto& t : tracks_)
            for (auto& h : t.hyps) ekf_predict(h, dt, noise_);
        for (auto& t : tracks_) ++t.age;

        const Association assoc = associate(tracks_, observations, ego, mount_, noise_);

        for (const auto& [ti, oi] : assoc.matches) {
            Track& t = tracks_[static_cast<std::size_t>(ti)];
            const BoxObservation& o = observations[static_cast<std::size_t>(oi)];
            switch_corner(t, o, ego, mount_);
            if (!update_track(t, o, ego, mount_, noise_).ok) {
                t.alive = false;  // covariance corruption
                continue;
            }
            prune_track(t, noise_.prune_tau);
            if (t.alive) {
                ++t.hits;
                t.misses = 0;
            }
        }
        for (int ti : assoc.unmatched_tracks) {
            Track& t = tracks_[static_cast<std::size_t>(ti)];
            if (++t.misses >= noise_.max_misses) t.alive = false;
        }
        for (int oi : assoc.unmatched_observations) {
            const BoxObservation& o = observations[static_cast<std::size_t>(oi)];
            if (require_corner_ && !o.corner_identified) continue;
            tracks_.push_back(init_track(next_id_++, o, ego, mount_, noise_));
        }
        std::erase_if(tracks_, [](const Track& t) { return !t.alive; });
    }

    const std::vector<Track>& tracks() const { return tracks_; }

private:
    TrackerNoise noise_;
    Pose2 mount_;
    bool require_corner_ = false;
    int next_id_ = 0;
    std::vector<Track> tracks_;
};

}  // namespace veldt
