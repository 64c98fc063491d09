#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "veldt/kitti.hpp"

namespace veldt {

// Spherical binning of a sweep. The sensor has two elevation bands: the upper
// 32 rows at 1/3 deg and the lower 32 at 1/2 deg. Azimuth is clipped to the
// labeled front sector [-40.5, 40.5] deg at 0.18 deg per column, giving
// floor(81/0.18)+1 = 451 columns. The top-row elevation is a mount-dependent
// constant (datasheet convention: +2 deg) and is configurable.
struct ProjectionGeometry {
    double azimuth_min_deg = -40.5;
    double azimuth_max_deg = 40.5;
    double azimuth_res_deg = 0.18;
    double upper_res_deg = 1.0 / 3.0;
    double lower_res_deg = 0.5;
    int upper_rows = 32;
    int lower_rows = 32;
    double elevation_origin_deg = 2.0;

    int height() const { return upper_rows + lower_rows; }
    int width() const {
        return static_cast<int>(std::floor((azimuth_max_deg - azimuth_min_deg) / azimuth_res_deg)) + 1;
    }

    // Column for an azimuth inside the field of view; bins are centered on
    // the grid angles so a mirrored scene lands in mirrored columns, and the
    // two boundary azimuths map to the first and last column. Returns -1
    // outside the field of view.
    int column(double az_deg) const {
        if (az_deg < azimuth_min_deg || az_deg > azimuth_max_deg) return -1;
        int col = static_cast<int>(std::floor((az_deg - azimuth_min_deg) / azimuth_res_deg + 0.5));
        if (col >= width()) col = width() - 1;
        return col;
    }

    // Row for an elevation angle; -1 when above the top ray or below the
    // bottom of the lower band.
    int row(double el_deg) const {
        const double d = elevation_origin_deg - el_deg;
        if (d < 0.0) return -1;
        const double upper_span = upper_rows * upper_res_deg;
        int r;
        if (d < upper_span)
            r = static_cast<int>(std::floor(d / upper_res_deg));
        else
            r = upper_rows + static_cast<int>(std::floor((d - upper_span) / lower_res_deg));
        if (r >= height()) return -1;
        return r;
    }
};

// Image-like encoding of one sweep: range and reflectivity channels plus a
// per-pixel back-pointer into the source scan (-1 where empty).
struct RangeImage {
    int height = 0;
    int width = 0;
    std::vector<double> range;         // meters; 0 where empty
    std::vector<double> reflectivity;  // [0,1]; 0 where empty
    std::vector<int32_t> point_index;
    std::size_t dropped_out_of_fov = 0;

    std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * width + c; }
    bool occupied(int r, int c) const { return point_index[idx(r, c)] >= 0; }

    std::size_t occupied_count() const {
        std::size_t n = 0;
        for (int32_t v : point_index)
            if (v >= 0) ++n;
        return n;
    }
};

// Per-pixel class grid: 0 = empty pixel, 1 = background, 2 = vehicle.
struct GroundTruthImage {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> cls;

    std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * width + c; }
};

inline RangeImage project(const RawScan& scan, const ProjectionGeometry& geom = {}) {
    RangeImage img;
    img.height = geom.height();
    img.width = geom.width();
    const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
    img.range.assign(n, 0.0);
    img.reflectivity.assign(n, 0.0);
    img.point_index.assign(n, -1);

    for (std::size_t i = 0; i < scan.points.size(); ++i) {
        const LidarPoint& p = scan.points[i];
        const double rho = p.range();
        if (rho <= 0.0) {
            ++img.dropped_out_of_fov;
            continue;
        }
        const double az = rad2deg(std::atan2(double(p.y), double(p.x)));
        const int col = geom.column(az);
        if (col < 0) {
            ++img.dropped_out_of_fov;
            continue;
        }
        const double el = rad2deg(std::atan2(double(p.z), std::hypot(double(p.x), double(p.y))));
        const int row = geom.row(el);
        if (row < 0) {
            ++img.dropped_out_of_fov;
            continue;
        }
        const std::size_t k = img.idx(row, col);
        // Nearest return wins the pixel; ties keep the earlier point.
        if (img.point_index[k] < 0 || rho < img.range[k]) {
            img.range[k] = rho;
            img.reflectivity[k] = p.reflectivity;
            img.point_index[k] = static_cast<int32_t>(i);
        }
    }
    return img;
}

inline GroundTruthImage rasterize_gt(const RangeImage& img, const RawScan& scan,
                                     const std::vector<uint8_t>& point_classes) {
    if (point_classes.size() != scan.points.size())
        throw std::runtime_error("point class count does not match scan size");
    GroundTruthImage gt;
    gt.height = img.height;
    gt.width = img.width;
    gt.cls.assign(img.point_index.size(), 0);
    for (std::size_t k = 0; k < img.point_index.size(); ++k) {
        const int32_t pi = img.point_index[k];
        if (pi >= 0) gt.cls[k] = point_classes[static_cast<std::size_t>(pi)];
    }
    return gt;
}

struct ScoredPoint {
    int32_t point_index = -1;
    LidarPoint point;
    float score = 0.f;
};

// Inverse of the projection: one output per occupied pixel, carrying the
// original point and the per-pixel score.
inline std::vector<ScoredPoint> unproject(const RangeImage& img, const RawScan& scan,
                                          const std::vector<float>& per_pixel_scores) {
    if (per_pixel_scores.size() != img.point_index.size())
        throw std::runtime_error("score grid shape does not match range image");
    std::vector<ScoredPoint> out;
    out.reserve(img.occupied_count());
    for (std::size_t k = 0; k < img.point_index.size(); ++k) {
        const int32_t pi = img.point_index[k];
        if (pi < 0) continue;
        out.push_back({pi, scan.points[static_cast<std::size_t>(pi)], per_pixel_scores[k]});
    }
    return out;
}

// Debug dump: 16-bit PGM pair (range scaled to [0, max_range], reflectivity to [0,1]).
inline void write_pgm_pair(const RangeImage& img, const std::string& path_prefix,
                           double max_range = 80.0) {
    auto write = [&](const std::string& path, const std::vector<double>& chan, double scale) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write greymap: " + path);
        out << "P5\n" << img.width << " " << img.height << "\n65535\n";
        for (double v : chan) {
            double t = std::clamp(v / scale, 0.0, 1.0);
            const uint16_t g = static_cast<uint16_t>(t * 65535.0);
            const uint8_t hi = static_cast<uint8_t>(g >> 8), lo = static_cast<uint8_t>(g & 0xff);
            out.put(static_cast<char>(hi)).put(static_cast<char>(lo));
        }
    };
    write(path_prefix + "_range.pgm", img.range, max_range);
    write(path_prefix + "_reflect.pgm", img.reflectivity, 1.0);
}

}  // namespace veldt
