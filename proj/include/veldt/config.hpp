#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "veldt/cluster_box.hpp"
#include "veldt/detectors.hpp"
#include "veldt/net_loss.hpp"
#include "veldt/net_train.hpp"
#include "veldt/range_image.hpp"
#include "veldt/tracker.hpp"

namespace veldt {

// Every numeric knob of the pipeline with the published defaults, grouped by
// module. A default-constructed config reproduces the reference setup; an
// empty config file parses to exactly that.
struct PipelineConfig {
    ProjectionGeometry projection;
    LossConfig loss;
    TrainConfig train;
    GroundRemovalParams ground;
    ClusterParams cluster;
    int cluster_min_points_oracle = 4;  // relaxed size floor for the oracle detector
    BoxFitParams boxfit;
    double perimeter_bin_deg = 0.18;
    TrackerNoise tracker;
    Pose2 sensor_mount;  // sensor pose on the ego vehicle
    double eval_iou_threshold = 0.5;
    bool eval_include_trucks = true;
    uint64_t seed = 1;
    int jobs = 1;

    struct Field {
        std::string key;  // "section.name"
        enum Kind { Double, Int, Bool, U64 } kind;
        void* ptr;
    };

    std::vector<Field> fields() {
        return {
            {"projection.azimuth_min_deg", Field::Double, &projection.azimuth_min_deg},
            {"projection.azimuth_max_deg", Field::Double, &projection.azimuth_max_deg},
            {"projection.azimuth_res_deg", Field::Double, &projection.azimuth_res_deg},
            {"projection.upper_res_deg", Field::Double, &projection.upper_res_deg},
            {"projection.lower_res_deg", Field::Double, &projection.lower_res_deg},
            {"projection.upper_rows", Field::Int, &projection.upper_rows},
            {"projection.lower_rows", Field::Int, &projection.lower_rows},
            {"projection.elevation_origin_deg", Field::Double, &projection.elevation_origin_deg},
            {"net.omega", Field::Double, &loss.omega},
            {"net.lambda1", Field::Double, &loss.lambda[0]},
            {"net.lambda2", Field::Double, &loss.lambda[1]},
            {"net.lambda3", Field::Double, &loss.lambda[2]},
            {"train.iterations", Field::Int, &train.iterations},
            {"train.batch", Field::Int, &train.batch},
            {"train.lr", Field::Double, &train.lr},
            {"train.lr_halve_at", Field::Double, &train.lr_halve_at},
            {"ground.tolerance", Field::Double, &ground.tolerance},
            {"ground.iterations", Field::Int, &ground.iterations},
            {"ground.max_tilt_deg", Field::Double, &ground.max_tilt_deg},
            {"ground.min_inlier_fraction", Field::Double, &ground.min_inlier_fraction},
            {"cluster.score_threshold", Field::Double, &cluster.score_threshold},
            {"cluster.max_dist", Field::Double, &cluster.max_dist},
            {"cluster.min_points", Field::Int, &cluster.min_points},
            {"cluster.min_points_oracle", Field::Int, &cluster_min_points_oracle},
            {"cluster.min_radius", Field::Double, &cluster.min_radius},
            {"cluster.perimeter_bin_deg", Field::Double, &perimeter_bin_deg},
            {"boxfit.sweep_step_deg", Field::Double, &boxfit.sweep_step_deg},
            {"boxfit.corner_margin", Field::Double, &boxfit.corner_margin},
            {"boxfit.corner_min_extent", Field::Double, &boxfit.corner_min_extent},
            {"boxfit.corner_min_points", Field::Int, &boxfit.corner_min_points},
            {"boxfit.k_c", Field::Double, &boxfit.k_c},
            {"tracker.sigma_wv", Field::Double, &tracker.sigma_wv},
            {"tracker.sigma_wrho", Field::Double, &tracker.sigma_wrho},
            {"tracker.sigma_xy", Field::Double, &tracker.sigma_xy},
            {"tracker.c_min", Field::Double, &tracker.c_min},
            {"tracker.init_sigma_x", Field::Double, &tracker.init_sigma[0]},
            {"tracker.init_sigma_y", Field::Double, &tracker.init_sigma[1]},
            {"tracker.init_sigma_theta", Field::Double, &tracker.init_sigma[2]},
            {"tracker.init_sigma_v", Field::Double, &tracker.init_sigma[3]},
            {"tracker.init_sigma_rho", Field::Double, &tracker.init_sigma[4]},
            {"tracker.prune_tau", Field::Double, &tracker.prune_tau},
            {"tracker.gate_maha2", Field::Double, &tracker.gate_maha2},
            {"tracker.max_misses", Field::Int, &tracker.max_misses},
            {"tracker.dims_alpha", Field::Double, &tracker.dims_alpha},
            {"tracker.mount_x", Field::Double, &sensor_mount.x},
            {"tracker.mount_y", Field::Double, &sensor_mount.y},
            {"tracker.mount_theta", Field::Double, &sensor_mount.theta},
            {"evaluation.iou_threshold", Field::Double, &eval_iou_threshold},
            {"evaluation.include_trucks", Field::Bool, &eval_include_trucks},
            {"pipeline.seed", Field::U64, &seed},
            {"pipeline.jobs", Field::Int, &jobs},
        };
    }

    void validate() const {
        auto fail = [](const std::string& key, const std::string& why) {
            throw std::runtime_error("config field " + key + ": " + why);
        };
        if (loss.omega <= 0) fail("net.omega", "must be positive");
        for (int i = 0; i < 3; ++i)
            if (loss.lambda[i] <= 0) fail("net.lambda" + std::to_string(i + 1), "must be positive");
        if (cluster.max_dist <= 0) fail("cluster.max_dist", "must be positive");
        if (cluster.min_points < 1) fail("cluster.min_points", "must be >= 1");
        if (cluster_min_points_oracle < 1) fail("cluster.min_points_oracle", "must be >= 1");
        if (cluster.min_radius < 0) fail("cluster.min_radius", "must be non-negative");
        if (boxfit.sweep_step_deg <= 0) fail("boxfit.sweep_step_deg", "must be positive");
        if (tracker.prune_tau <= 0 || tracker.prune_tau >= 1)
            fail("tracker.prune_tau", "must lie in (0, 1)");
        if (tracker.sigma_xy <= 0) fail("tracker.sigma_xy", "must be positive");
        if (tracker.sigma_wv <= 0 || tracker.sigma_wrho <= 0)
            fail("tracker.sigma_wv/sigma_wrho", "must be positive");
        for (int i = 0; i < 5; ++i)
            if (tracker.init_sigma[i] <= 0)
                fail("tracker.init_sigma_*", "must be positive");
        if (tracker.max_misses < 1) fail("tracker.max_misses", "must be >= 1");
        if (eval_iou_threshold <= 0 || eval_iou_threshold > 1)
            fail("evaluation.iou_threshold", "must lie in (0, 1]");
        if (train.batch < 1) fail("train.batch", "must be >= 1");
        if (train.iterations < 0) fail("train.iterations", "must be non-negative");
        if (jobs < 1) fail("pipeline.jobs", "must be >= 1");
        if (projection.width() < 1 || projection.height() < 1)
            fail("projection.*", "degenerate image shape");
    }
};

// Flat "key = value" file with [section] headers; '#' starts a comment.
inline PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    auto fields = cfg.fields();

    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        bool found = false;
        for (auto& f : fields) {
            if (f.key != key) continue;
            found = true;
            try {
                switch (f.kind) {
                    case PipelineConfig::Field::Double: *static_cast<double*>(f.ptr) = std::stod(value); break;
                    case PipelineConfig::Field::Int: *static_cast<int*>(f.ptr) = std::stoi(value); break;
                    case PipelineConfig::Field::U64:
                        *static_cast<uint64_t*>(f.ptr) = std::stoull(value);
                        break;
                    case PipelineConfig::Field::Bool:
                        if (value == "true" || value == "1") *static_cast<bool*>(f.ptr) = true;
                        else if (value == "false" || value == "0") *static_cast<bool*>(f.ptr) = false;
                        else throw std::invalid_argument("bool");
                        break;
                }
            } catch (const std::exception&) {
                throw std::runtime_error("config field " + key + ": cannot parse value '" + value +
                                         "' (line " + std::to_string(line_no) + ")");
            }
            break;
        }
        if (!found)
            throw std::runtime_error("config line " + std::to_string(line_no) + ": unknown field " + key);
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline std::string serialize_config(PipelineConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (auto& f : cfg.fields()) {
        const auto dot = f.key.find('.');
        const std::string sec = f.key.substr(0, dot);
        const std::string name = f.key.substr(dot + 1);
        if (sec != section) {
            if (!section.empty()) out << "\n";
            out << "[" << sec << "]\n";
            section = sec;
        }
        out << name << " = ";
        char buf[64];
        switch (f.kind) {
            case PipelineConfig::Field::Double:
                std::snprintf(buf, sizeof(buf), "%.17g", *static_cast<double*>(f.ptr));
                out << buf;
                break;
            case PipelineConfig::Field::Int: out << *static_cast<int*>(f.ptr); break;
            case PipelineConfig::Field::U64: out << *static_cast<uint64_t*>(f.ptr); break;
            case PipelineConfig::Field::Bool:
                out << (*static_cast<bool*>(f.ptr) ? "true" : "false");
                break;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace veldt
