#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "veldt/geometry.hpp"

namespace veldt {

// One Velodyne return. Matches the on-disk record: 4 consecutive
// little-endian float32 (x, y, z, reflectivity).
struct LidarPoint {
    float x = 0.f;
    float y = 0.f;
    float z = 0.f;
    float reflectivity = 0.f;

    double range() const { return std::sqrt(double(x) * x + double(y) * y + double(z) * z); }
};

struct RawScan {
    int frame_index = 0;
    std::vector<LidarPoint> points;  // file order preserved
};

enum class ObjectClass : uint8_t { Car, Van, Truck, Other };

inline bool is_vehicle_class(ObjectClass c) { return c != ObjectClass::Other; }

inline ObjectClass parse_object_class(const std::string& s) {
    if (s == "Car") return ObjectClass::Car;
    if (s == "Van") return ObjectClass::Van;
    if (s == "Truck") return ObjectClass::Truck;
    return ObjectClass::Other;
}

inline const char* object_class_name(ObjectClass c) {
    switch (c) {
        case ObjectClass::Car: return "Car";
        case ObjectClass::Van: return "Van";
        case ObjectClass::Truck: return "Truck";
        default: return "Other";
    }
}

// An annotated 3D box in the sensor frame: center of the body, extents and yaw
// about the vertical axis.
struct LabelBox3D {
    int frame_index = 0;
    int track_id = -1;
    ObjectClass cls = ObjectClass::Other;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double height = 0.0;
    double width = 0.0;
    double length = 0.0;
    double yaw = 0.0;

    RectBEV footprint() const { return {center.x(), center.y(), yaw, length, width}; }
};

// Camera-to-sensor calibration: labels live in the rectified camera frame,
// point clouds in the sensor frame.
struct Calibration {
    Eigen::Matrix3d rect = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d velo_to_cam_rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d velo_to_cam_trans = Eigen::Vector3d::Zero();

    Eigen::Vector3d cam_to_velo(const Eigen::Vector3d& p_cam) const {
        return velo_to_cam_rot.transpose() * (rect.transpose() * p_cam - velo_to_cam_trans);
    }

    Eigen::Vector3d velo_to_cam(const Eigen::Vector3d& p_velo) const {
        return rect * (velo_to_cam_rot * p_velo + velo_to_cam_trans);
    }

    // Rotation blocks must be orthonormal within 1e-6.
    bool valid() const {
        const double e1 = (rect * rect.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
        const double e2 =
            (velo_to_cam_rot * velo_to_cam_rot.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
        return e1 < 1e-6 && e2 < 1e-6;
    }
};

// Ego pose in the world frame at a given time.
struct EgoPose {
    Pose2 pose;
    double timestamp = 0.0;
};

// ---------------------------------------------------------------------------
// Scan I/O

inline RawScan read_scan(const std::string& path, int frame_index = 0, std::size_t* dropped = nullptr) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open scan file: " + path);
    const std::streamoff bytes = in.tellg();
    constexpr std::streamoff kRecord = 4 * sizeof(float);
    if (bytes % kRecord != 0)
        throw std::runtime_error("truncated scan record in " + path + " at byte offset " +
                                 std::to_string((bytes / kRecord) * kRecord));
    in.seekg(0, std::ios::beg);

    RawScan scan;
    scan.frame_index = frame_index;
    scan.points.reserve(static_cast<std::size_t>(bytes / kRecord));
    std::size_t n_dropped = 0;
    float rec[4];
    while (in.read(reinterpret_cast<char*>(rec), kRecord)) {
        LidarPoint p{rec[0], rec[1], rec[2], rec[3]};
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
            !std::isfinite(p.reflectivity) || p.range() <= 0.0) {
            ++n_dropped;
            continue;
        }
        p.reflectivity = std::clamp(p.reflectivity, 0.f, 1.f);
        scan.points.push_back(p);
    }
    if (dropped) *dropped = n_dropped;
    return scan;
}

inline void write_scan(const std::string& path, const RawScan& scan) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write scan file: " + path);
    for (const auto& p : scan.points) {
        const float rec[4] = {p.x, p.y, p.z, p.reflectivity};
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
}

// ---------------------------------------------------------------------------
// Label I/O
//
// KITTI tracking label line:
//   frame id type truncated occluded alpha left top right bottom h w l x y z ry
// Locations are in the rectified camera frame with the box origin at the
// bottom-face center; ry rotates about the camera's down axis. We convert to a
// sensor-frame body-center box with yaw about the vertical axis using the
// standard camera/velodyne axis convention (yaw = -ry - pi/2) plus the
// calibrated point transform.

inline std::vector<LabelBox3D> read_labels(const std::string& path, const Calibration& calib = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label file: " + path);

    std::vector<LabelBox3D> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        LabelBox3D b;
        std::string type;
        double trunc, occ, alpha, l2d, t2d, r2d, b2d, lx, ly, lz, ry;
        if (!(ss >> b.frame_index >> b.track_id >> type >> trunc >> occ >> alpha >> l2d >> t2d >>
              r2d >> b2d >> b.height >> b.width >> b.length >> lx >> ly >> lz >> ry))
            throw std::runtime_error("malformed label line " + std::to_string(line_no) + " in " + path);
        b.cls = parse_object_class(type);
        if (type == "DontCare") continue;
        b.center = calib.cam_to_velo(Eigen::Vector3d(lx, ly, lz));
        b.center.z() += 0.5 * b.height;  // bottom face -> body center
        b.yaw = wrap_angle(-ry - 0.5 * kPi);
        boxes.push_back(b);
    }
    return boxes;
}

inline void write_labels(const std::string& path, const std::vector<LabelBox3D>& boxes,
                         const Calibration& calib = {}) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write label file: " + path);
    for (const auto& b : boxes) {
        Eigen::Vector3d bottom = b.center;
        bottom.z() -= 0.5 * b.height;
        const Eigen::Vector3d loc = calib.velo_to_cam(bottom);
        const double ry = wrap_angle(-b.yaw - 0.5 * kPi);
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "%d %d %s 0 0 0 0.00 0.00 0.00 0.00 %.4f %.4f %.4f %.4f %.4f %.4f %.6f\n",
                      b.frame_index, b.track_id, object_class_name(b.cls), b.height, b.width,
                      b.length, loc.x(), loc.y(), loc.z(), ry);
        out << buf;
    }
}

// Calibration file: named row-major matrices, one per line ("R_rect: r11 r12 ...").
inline Calibration read_calib(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calib file: " + path);
    Calibration c;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string name;
        if (!(ss >> name)) continue;
        if (!name.empty() && name.back() == ':') name.pop_back();
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if ((name == "R_rect" || name == "R0_rect") && vals.size() >= 9) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) c.rect(i, j) = vals[i * 3 + j];
        } else if ((name == "Tr_velo_cam" || name == "Tr_velo_to_cam") && vals.size() >= 12) {
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) c.velo_to_cam_rot(i, j) = vals[i * 4 + j];
                c.velo_to_cam_trans(i) = vals[i * 4 + 3];
            }
        }
    }
    if (!c.valid()) throw std::runtime_error("calibration rotation blocks not orthonormal: " + path);
    return c;
}

inline void write_calib(const std::string& path, const Calibration& c) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write calib file: " + path);
    out << "R_rect:";
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out << " " << c.rect(i, j);
    out << "\nTr_velo_cam:";
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out << " " << c.velo_to_cam_rot(i, j);
        out << " " << c.velo_to_cam_trans(i);
    }
    out << "\n";
}

// Optional ego odometry: CSV "frame,x,y,theta". Without a file the ego is
// static at the origin; the sensor mount pose is a separate config constant.
inline std::vector<EgoPose> read_poses(const std::string& path, double dt = 0.1) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose file: " + path);
    std::vector<EgoPose> poses;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.rfind("frame", 0) == 0) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        int frame;
        EgoPose e;
        if (!(ss >> frame >> e.pose.x >> e.pose.y >> e.pose.theta))
            throw std::runtime_error("malformed pose line " + std::to_string(line_no) + " in " + path);
        e.timestamp = dt * frame;
        poses.push_back(e);
    }
    return poses;
}

// Sweeps carry no timestamps; simulate the sensor's 10 Hz rate.
inline std::vector<double> synth_timestamps(int n_frames) {
    std::vector<double> t(static_cast<std::size_t>(std::max(n_frames, 0)));
    for (int i = 0; i < n_frames; ++i) t[static_cast<std::size_t>(i)] = 0.1 * i;
    return t;
}

// Point classes: 1 = background, 2 = vehicle.
inline constexpr uint8_t kClassBackground = 1;
inline constexpr uint8_t kClassVehicle = 2;

inline bool point_in_box(const LidarPoint& p, const LabelBox3D& b) {
    const double dx = p.x - b.center.x();
    const double dy = p.y - b.center.y();
    const double dz = p.z - b.center.z();
    const double c = std::cos(-b.yaw), s = std::sin(-b.yaw);
    const double lx = c * dx - s * dy;
    const double ly = s * dx + c * dy;
    // Closed intervals: boundary points count as inliers.
    return std::abs(lx) <= 0.5 * b.length && std::abs(ly) <= 0.5 * b.width &&
           std::abs(dz) <= 0.5 * b.height;
}

inline std::vector<uint8_t> label_points(const RawScan& scan, const std::vector<LabelBox3D>& boxes) {
    std::vector<uint8_t> classes(scan.points.size(), kClassBackground);
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        for (const auto& b : boxes) {
            if (!is_vehicle_class(b.cls)) continue;
            if (point_in_box(scan.points[i], b)) {
                classes[i] = kClassVehicle;
                break;
            }
        }
    }
    return classes;
}

}  // namespace veldt
