#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "veldt/cluster_box.hpp"
#include "veldt/config.hpp"
#include "veldt/detectors.hpp"
#include "veldt/evaluation.hpp"
#include "veldt/kitti.hpp"
#include "veldt/net.hpp"
#include "veldt/net_train.hpp"
#include "veldt/range_image.hpp"
#include "veldt/synth.hpp"
#include "veldt/tracker.hpp"

namespace veldt {

// ---------------------------------------------------------------------------
// Dataset layout (KITTI tracking): <root>/velodyne/<seq>/%06d.bin,
// <root>/label_02/<seq>.txt, <root>/calib/<seq>.txt, optional
// <root>/pose/<seq>.csv for ego odometry.

struct Sequence {
    std::string root;
    std::string name;
    std::vector<std::string> scan_paths;              // frame order
    std::map<int, std::vector<LabelBox3D>> labels;    // frame -> boxes
    Calibration calib;
    std::vector<EgoPose> ego;                         // per frame; identity when absent

    int frames() const { return static_cast<int>(scan_paths.size()); }

    Pose2 ego_at(int frame) const {
        if (ego.empty()) return {};
        const std::size_t i = std::min(static_cast<std::size_t>(frame), ego.size() - 1);
        return ego[i].pose;
    }
};

inline Sequence load_sequence(const std::string& root, const std::string& seq,
                              bool need_labels = true) {
    namespace fs = std::filesystem;
    Sequence s;
    s.root = root;
    s.name = seq;

    const fs::path scans_dir = fs::path(root) / "velodyne" / seq;
    if (!fs::is_directory(scans_dir))
        throw std::runtime_error("no scan directory: " + scans_dir.string());
    for (const auto& e : fs::directory_iterator(scans_dir))
        if (e.path().extension() == ".bin") s.scan_paths.push_back(e.path().string());
    std::sort(s.scan_paths.begin(), s.scan_paths.end());
    if (s.scan_paths.empty()) throw std::runtime_error("empty sequence: " + scans_dir.string());

    const fs::path calib_path = fs::path(root) / "calib" / (seq + ".txt");
    if (fs::exists(calib_path)) s.calib = read_calib(calib_path.string());

    const fs::path label_path = fs::path(root) / "label_02" / (seq + ".txt");
    if (fs::exists(label_path)) {
        for (const auto& b : read_labels(label_path.string(), s.calib))
            s.labels[b.frame_index].push_back(b);
    } else if (need_labels) {
        throw std::runtime_error("no label file: " + label_path.string());
    }

    const fs::path pose_path = fs::path(root) / "pose" / (seq + ".csv");
    if (fs::exists(pose_path)) s.ego = read_poses(pose_path.string());
    return s;
}

// ---------------------------------------------------------------------------
// Per-frame detection + observation extraction.

struct DetectorContext {
    DetectorKind kind = DetectorKind::Oracle;
    NetParams<float>* net = nullptr;  // required for the learned detector
};

inline PointScores score_frame(const RawScan& scan, const Sequence& seq, int frame,
                               const DetectorContext& det, const PipelineConfig& cfg) {
    switch (det.kind) {
        case DetectorKind::Geometric:
            return geometric_scores(scan, cfg.ground,
                                    cfg.seed * 2654435761ull + static_cast<uint64_t>(frame));
        case DetectorKind::Net:
            if (!det.net) throw std::runtime_error("net detector requires a checkpoint");
            return net_scores(scan, *det.net, cfg.projection);
        default: {
            const auto it = seq.labels.find(frame);
            static const std::vector<LabelBox3D> kEmpty;
            return oracle_scores(scan, it == seq.labels.end() ? kEmpty : it->second);
        }
    }
}

inline std::vector<BoxObservation> observe_frame(const RawScan& scan, const Sequence& seq,
                                                 int frame, const DetectorContext& det,
                                                 const PipelineConfig& cfg) {
    const PointScores scores = score_frame(scan, seq, frame, det, cfg);
    ClusterParams cp = cfg.cluster;
    if (det.kind == DetectorKind::Oracle) cp.min_points = cfg.cluster_min_points_oracle;
    return extract_observations(scan, scores, cp, cfg.boxfit, cfg.perimeter_bin_deg);
}

// Observation extraction for all frames, optionally using a worker pool.
// Results are indexed by frame, so the output does not depend on the job count.
inline std::vector<std::vector<BoxObservation>> observe_sequence(const Sequence& seq,
                                                                 const DetectorContext& det,
                                                                 const PipelineConfig& cfg) {
    const int n = seq.frames();
    std::vector<std::vector<BoxObservation>> out(static_cast<std::size_t>(n));
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (int f = 0; f < n; ++f) {
            const RawScan scan = read_scan(seq.scan_paths[static_cast<std::size_t>(f)], f);
            out[static_cast<std::size_t>(f)] = observe_frame(scan, seq, f, det, cfg);
        }
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (int f = next.fetch_add(1); f < n; f = next.fetch_add(1)) {
                const RawScan scan = read_scan(seq.scan_paths[static_cast<std::size_t>(f)], f);
                out[static_cast<std::size_t>(f)] = observe_frame(scan, seq, f, det, cfg);
            }
        });
    for (auto& t : pool) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// CSV dumps

inline void write_observations_csv(const std::string& path,
                                   const std::vector<std::vector<BoxObservation>>& per_frame) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write observations: " + path);
    out << "frame,x,y,theta,w,l,h,vehicleness,c,corner_flag\n";
    char buf[256];
    for (std::size_t f = 0; f < per_frame.size(); ++f)
        for (const auto& o : per_frame[f]) {
            const CanonicalBox b = canonicalize_box(o.x, o.y, o.theta, o.length, o.width,
                                                    o.extent_sign_x, o.extent_sign_y);
            std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", f,
                          b.x, b.y, b.theta, b.width, b.length, o.height, o.vehicleness, o.c,
                          o.corner_identified ? 1 : 0);
            out << buf;
        }
}

struct TrackRow {
    int frame = 0;
    int id = 0;
    double x = 0, y = 0, theta = 0, v = 0, rho = 0;
    double w = 0, l = 0, h = 0;
    double weight_leader = 0;

    // The dumped pose is the canonical anchored-box form: the body extends
    // along +theta and its left normal from (x, y).
    RectBEV footprint() const {
        const Vec2 center = Vec2{x, y} + rotate({0.5 * l, 0.5 * w}, theta);
        return {center.x, center.y, theta, l, w};
    }
};

inline void write_tracks_csv(const std::string& path, const std::vector<TrackRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tracks: " + path);
    out << "frame,id,x,y,theta,v,rho,w,l,h,weight_leader\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.frame, r.id, r.x,
                      r.y, r.theta, r.v, r.rho, r.w, r.l, r.h, r.weight_leader);
        out << buf;
    }
}

inline std::vector<TrackRow> read_tracks_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tracks file: " + path);
    std::vector<TrackRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            if (line.rfind("frame", 0) == 0) continue;
        }
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        TrackRow r;
        if (!(ss >> r.frame >> r.id >> r.x >> r.y >> r.theta >> r.v >> r.rho >> r.w >> r.l >>
              r.h >> r.weight_leader))
            throw std::runtime_error("malformed track row in " + path + ": " + line);
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Commands (the CLI front-end parses arguments and calls these).

struct ProjectStats {
    int frames = 0;
    std::size_t points = 0;
    std::size_t occupied = 0;
    std::size_t dropped = 0;
};

inline ProjectStats cmd_project(const Sequence& seq, const PipelineConfig& cfg,
                                const std::string& out_dir, bool write_images = true) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    ProjectStats stats;
    std::ofstream csv(fs::path(out_dir) / "occupancy.csv");
    csv << "frame,points,occupied,dropped_out_of_fov\n";
    for (int f = 0; f < seq.frames(); ++f) {
        const RawScan scan = read_scan(seq.scan_paths[static_cast<std::size_t>(f)], f);
        const RangeImage img = project(scan, cfg.projection);
        if (write_images) {
            char name[32];
            std::snprintf(name, sizeof(name), "%06d", f);
            write_pgm_pair(img, (fs::path(out_dir) / name).string());
        }
        csv << f << "," << scan.points.size() << "," << img.occupied_count() << ","
            << img.dropped_out_of_fov << "\n";
        ++stats.frames;
        stats.points += scan.points.size();
        stats.occupied += img.occupied_count();
        stats.dropped += img.dropped_out_of_fov;
    }
    return stats;
}

inline void cmd_detect(const Sequence& seq, const PipelineConfig& cfg, const DetectorContext& det,
                       const std::string& out_csv) {
    write_observations_csv(out_csv, observe_sequence(seq, det, cfg));
}

struct TrackRunStats {
    double mean_frame_ms = 0;
    double max_frame_ms = 0;
};

inline TrackRunStats cmd_track(const Sequence& seq, const PipelineConfig& cfg,
                               const DetectorContext& det, const std::string& out_csv) {
    const auto observations = observe_sequence(seq, det, cfg);
    const std::vector<double> stamps = synth_timestamps(seq.frames());

    MultiTracker tracker(cfg.tracker, cfg.sensor_mount,
                         det.kind == DetectorKind::Geometric /* corner gate */);
    std::vector<TrackRow> rows;
    TrackRunStats stats;
    double total_ms = 0;
    for (int f = 0; f < seq.frames(); ++f) {
        const auto t0 = std::chrono::steady_clock::now();
        const double dt = f == 0 ? 0.1 : stamps[static_cast<std::size_t>(f)] - stamps[static_cast<std::size_t>(f - 1)];
        tracker.step(observations[static_cast<std::size_t>(f)], seq.ego_at(f), dt);
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        total_ms += ms;
        stats.max_frame_ms = std::max(stats.max_frame_ms, ms);

        for (const Track& t : tracker.tracks()) {
            const CanonicalBox b = track_canonical_box(t);
            const Hypothesis& lead = t.leader();
            rows.push_back({f, t.id, b.x, b.y, b.theta, lead.x(3), lead.x(4), b.width, b.length,
                            t.dim_h, lead.weight});
        }
    }
    stats.mean_frame_ms = seq.frames() > 0 ? total_ms / seq.frames() : 0;
    write_tracks_csv(out_csv, rows);
    return stats;
}

// Ground-truth boxes for one frame, world frame, restricted to the sensor's
// labeled sector.
inline std::vector<EvalBox> gt_eval_boxes(const Sequence& seq, int frame,
                                          const PipelineConfig& cfg) {
    std::vector<EvalBox> out;
    const auto it = seq.labels.find(frame);
    if (it == seq.labels.end()) return out;
    const Pose2 ego = seq.ego_at(frame);
    for (const auto& b : it->second) {
        if (!is_vehicle_class(b.cls)) continue;
        if (!cfg.eval_include_trucks && b.cls == ObjectClass::Truck) continue;
        const double az = rad2deg(std::atan2(b.center.y(), b.center.x()));
        if (az < cfg.projection.azimuth_min_deg || az > cfg.projection.azimuth_max_deg) continue;
        if (b.center.head<2>().norm() > 75.0) continue;
        const Pose2 world = ego.compose({b.center.x(), b.center.y(), b.yaw});
        out.push_back({b.track_id, {world.x, world.y, world.theta, b.length, b.width}});
    }
    return out;
}

inline TrackingMetrics cmd_evaluate(const Sequence& seq, const PipelineConfig& cfg,
                                    const std::string& tracks_csv) {
    const std::vector<TrackRow> rows = read_tracks_csv(tracks_csv);
    std::map<int, std::vector<EvalBox>> tracks_by_frame;
    for (const auto& r : rows) {
        if (r.frame < 0 || r.frame >= seq.frames())
            throw std::runtime_error("track frame " + std::to_string(r.frame) +
                                     " outside sequence of " + std::to_string(seq.frames()) +
                                     " frames");
        tracks_by_frame[r.frame].push_back({r.id, r.footprint()});
    }
    MetricsAccumulator acc;
    for (int f = 0; f < seq.frames(); ++f) {
        const auto it = tracks_by_frame.find(f);
        static const std::vector<EvalBox> kEmpty;
        acc.add_frame(gt_eval_boxes(seq, f, cfg), it == tracks_by_frame.end() ? kEmpty : it->second,
                      cfg.eval_iou_threshold);
    }
    return acc.finalize();
}

inline std::string metrics_table(const TrackingMetrics& m) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "Mostly Tracked (%%)   %6.1f\n"
                  "Partly Tracked (%%)   %6.1f\n"
                  "Mostly Lost (%%)      %6.1f\n"
                  "Recall (%%)           %6.1f\n"
                  "Precision (%%)        %6.1f\n"
                  "False Alarm Rate     %6.2f\n"
                  "MOTA                 %6.1f\n",
                  100.0 * m.mt, 100.0 * m.pt, 100.0 * m.ml, 100.0 * m.recall, 100.0 * m.precision,
                  m.false_alarm_rate, m.mota);
    return buf;
}

inline void write_metrics_csv(const std::string& path, const TrackingMetrics& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics: " + path);
    out << "metric,value\n";
    char buf[64];
    auto row = [&](const char* k, double v) {
        std::snprintf(buf, sizeof(buf), "%s,%.4f\n", k, v);
        out << buf;
    };
    row("mt", 100.0 * m.mt);
    row("pt", 100.0 * m.pt);
    row("ml", 100.0 * m.ml);
    row("recall", 100.0 * m.recall);
    row("precision", 100.0 * m.precision);
    row("false_alarm_rate", m.false_alarm_rate);
    row("mota", m.mota);
}

// Train on the labeled scans of one or more sequences; every frame becomes a
// sample. Writes the checkpoint (with optimizer state for resuming) and a
// loss log next to it.
inline std::vector<TrainLogRow> cmd_train(const std::vector<Sequence>& seqs, PipelineConfig cfg,
                                          const std::string& checkpoint_path,
                                          const std::string& log_path, bool resume = false,
                                          int64_t total_budget = 0) {
    std::vector<TrainSample> samples;
    NetShape shape;
    for (const auto& seq : seqs) {
        for (int f = 0; f < seq.frames(); ++f) {
            const RawScan scan = read_scan(seq.scan_paths[static_cast<std::size_t>(f)], f);
            const RangeImage img = project(scan, cfg.projection);
            const auto it = seq.labels.find(f);
            static const std::vector<LabelBox3D> kEmpty;
            const GroundTruthImage gt =
                rasterize_gt(img, scan, label_points(scan, it == seq.labels.end() ? kEmpty : it->second));
            samples.push_back(make_train_sample(img, gt, shape.cols));
        }
    }
    if (samples.empty()) throw std::runtime_error("no training scans found");

    NetParams<float> params(shape);
    AdamState<float> opt;
    int64_t start = 0;
    if (resume) {
        params = load_checkpoint<float>(checkpoint_path, &opt, &start);
    } else {
        params.init_he(cfg.seed);
    }
    cfg.train.seed = cfg.seed;
    cfg.train.loss = cfg.loss;
    if (total_budget <= 0) total_budget = start + cfg.train.iterations;
    const auto log = train_net(params, samples, cfg.train, opt, start, total_budget);
    save_checkpoint(checkpoint_path, params, &opt, start + cfg.train.iterations);
    append_train_log(log_path, log, /*write_header=*/!resume);
    return log;
}

}  // namespace veldt
