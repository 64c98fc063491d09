#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "veldt/range_image.hpp"

using namespace veldt;

namespace {

LidarPoint from_spherical(double az_deg, double el_deg, double rho, float refl = 0.5f) {
    const double az = deg2rad(az_deg), el = deg2rad(el_deg);
    return {static_cast<float>(rho * std::cos(el) * std::cos(az)),
            static_cast<float>(rho * std::cos(el) * std::sin(az)),
            static_cast<float>(rho * std::sin(el)), refl};
}

}  // namespace

TEST_CASE("projection geometry dimensions") {
    ProjectionGeometry g;
    CHECK(g.width() == 451);
    CHECK(g.height() == 64);
}

TEST_CASE("column binning") {
    ProjectionGeometry g;
    CHECK(g.column(0.0) == 225);
    CHECK(g.column(-40.5) == 0);
    CHECK(g.column(40.5) == 450);  // inclusive upper edge
    CHECK(g.column(41.0) == -1);
    CHECK(g.column(-41.0) == -1);
}

TEST_CASE("row binning across the two elevation bands") {
    ProjectionGeometry g;
    CHECK(g.row(2.0) == 0);                       // top ray
    CHECK(g.row(2.0 - 0.5 / 3.0) == 0);           // inside the first upper bin
    CHECK(g.row(2.0 - 32.0 / 3.0) == 32);         // band boundary starts the lower half
    CHECK(g.row(2.0 - 32.0 / 3.0 - 0.25) == 32);
    CHECK(g.row(2.0 - 32.0 / 3.0 - 16.0001) == -1);  // below the last row
    CHECK(g.row(2.5) == -1);                      // above the top ray
}

TEST_CASE("project: first lower-band point lands at column 225 with its range") {
    RawScan scan;
    const double boundary_el = 2.0 - 32.0 / 3.0 - 1e-4;  // just inside row 32
    scan.points.push_back(from_spherical(0.0, boundary_el, 10.0));
    const RangeImage img = project(scan);
    REQUIRE(img.occupied(32, 225));
    CHECK(img.range[img.idx(32, 225)] == Catch::Approx(10.0).margin(1e-5));
}

TEST_CASE("project drops out-of-view azimuth") {
    RawScan scan;
    scan.points.push_back(from_spherical(41.0, 0.0, 10.0));
    const RangeImage img = project(scan);
    CHECK(img.occupied_count() == 0);
    CHECK(img.dropped_out_of_fov == 1);
}

TEST_CASE("pixel collision keeps the nearest return in either order") {
    const double el = 0.05, az = 0.0;
    for (bool near_first : {true, false}) {
        RawScan scan;
        if (near_first) {
            scan.points.push_back(from_spherical(az, el, 5.0));
            scan.points.push_back(from_spherical(az, el, 8.0));
        } else {
            scan.points.push_back(from_spherical(az, el, 8.0));
            scan.points.push_back(from_spherical(az, el, 5.0));
        }
        const RangeImage img = project(scan);
        CHECK(img.occupied_count() == 1);
        const int row = ProjectionGeometry{}.row(el);
        CHECK(img.range[img.idx(row, 225)] == Catch::Approx(5.0).margin(1e-5));
    }
}

TEST_CASE("ground truth rasterization") {
    RawScan scan;
    scan.points.push_back(from_spherical(-10.0, 0.05, 7.0));
    scan.points.push_back(from_spherical(10.0, -5.05, 12.0));
    const RangeImage img = project(scan);

    SECTION("all background") {
        const GroundTruthImage gt = rasterize_gt(img, scan, {1, 1});
        std::size_t ones = 0;
        for (uint8_t c : gt.cls)
            if (c == 1) ++ones;
        CHECK(ones == img.occupied_count());
    }
    SECTION("one vehicle point marks its pixel") {
        const GroundTruthImage gt = rasterize_gt(img, scan, {1, 2});
        const ProjectionGeometry g;
        CHECK(gt.cls[gt.idx(g.row(-5.05), g.column(10.0))] == 2);
    }
    SECTION("length mismatch rejected") {
        CHECK_THROWS(rasterize_gt(img, scan, {1}));
    }
}

TEST_CASE("collision: vehicle in front of background wins the pixel") {
    RawScan scan;
    scan.points.push_back(from_spherical(0.0, -3.03, 6.0));   // near, vehicle
    scan.points.push_back(from_spherical(0.0, -3.03, 14.0));  // far, background
    for (int swap = 0; swap < 2; ++swap) {
        RawScan s;
        std::vector<uint8_t> classes;
        if (swap == 0) {
            s.points = {scan.points[0], scan.points[1]};
            classes = {2, 1};
        } else {
            s.points = {scan.points[1], scan.points[0]};
            classes = {1, 2};
        }
        const RangeImage img = project(s);
        const GroundTruthImage gt = rasterize_gt(img, s, classes);
        const ProjectionGeometry g;
        CHECK(gt.cls[gt.idx(g.row(-3.03), g.column(0.0))] == 2);
    }
}

TEST_CASE("unproject returns one output per occupied pixel") {
    RawScan scan;
    scan.points.push_back(from_spherical(5.0, -1.0, 9.0, 0.7f));
    const RangeImage img = project(scan);
    std::vector<float> scores(img.range.size(), 0.f);
    scores[img.idx(ProjectionGeometry{}.row(-1.0), ProjectionGeometry{}.column(5.0))] = 0.9f;
    const auto pts = unproject(img, scan, scores);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].point_index == 0);
    CHECK(pts[0].score == 0.9f);
    CHECK(pts[0].point.x == scan.points[0].x);

    SECTION("empty image") {
        const RangeImage empty = project(RawScan{});
        const auto none = unproject(empty, RawScan{}, std::vector<float>(empty.range.size(), 0.f));
        CHECK(none.empty());
    }
    SECTION("shape mismatch") {
        CHECK_THROWS(unproject(img, scan, std::vector<float>(3, 0.f)));
    }
}

namespace {

// Random scan with distinct pixels for every point.
RawScan random_collision_free_scan(std::mt19937_64& rng, int n) {
    const ProjectionGeometry g;
    std::uniform_real_distribution<double> uaz(-40.4, 40.4);
    std::uniform_real_distribution<double> uel(2.0 - 32.0 / 3.0 - 15.9, 1.9);
    std::uniform_real_distribution<double> urho(2.0, 70.0);
    std::set<std::pair<int, int>> used;
    RawScan scan;
    while (static_cast<int>(scan.points.size()) < n) {
        const double az = uaz(rng), el = uel(rng);
        const auto key = std::make_pair(g.row(el), g.column(az));
        if (key.first < 0 || key.second < 0 || used.count(key)) continue;
        used.insert(key);
        scan.points.push_back(from_spherical(az, el, urho(rng)));
    }
    return scan;
}

}  // namespace

TEST_CASE("project/unproject set equality on collision-free scans") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const RawScan scan = random_collision_free_scan(rng, 120);
        const RangeImage img = project(scan);
        REQUIRE(img.occupied_count() == scan.points.size());
        // stored range equals the spherical range of the indexed point
        for (std::size_t k = 0; k < img.point_index.size(); ++k) {
            if (img.point_index[k] < 0) continue;
            const auto& p = scan.points[static_cast<std::size_t>(img.point_index[k])];
            REQUIRE(std::abs(img.range[k] - p.range()) < 1e-6);
        }
        const auto pts = unproject(img, scan, std::vector<float>(img.range.size(), 1.f));
        std::set<int32_t> indices;
        for (const auto& p : pts) indices.insert(p.point_index);
        REQUIRE(indices.size() == scan.points.size());
        CHECK(*indices.begin() == 0);
        CHECK(*indices.rbegin() == static_cast<int32_t>(scan.points.size()) - 1);
    }
}

TEST_CASE("column index monotone in azimuth, row monotone in elevation") {
    const ProjectionGeometry g;
    int prev_col = 0;
    for (double az = -40.5; az <= 40.5; az += 0.05) {
        const int col = g.column(az);
        REQUIRE(col >= prev_col);
        prev_col = col;
    }
    int prev_row = -1;
    for (double el = 2.0; el > 2.0 - 32.0 / 3.0 - 16.0 + 1e-9; el -= 0.05) {
        const int row = g.row(el);
        REQUIRE(row >= prev_row);
        prev_row = row;
    }
}

TEST_CASE("horizontal flip of the scene mirrors the image columns") {
    std::mt19937_64 rng(77);
    const RawScan scan = random_collision_free_scan(rng, 150);
    RawScan mirrored = scan;
    for (auto& p : mirrored.points) p.y = -p.y;

    const RangeImage a = project(scan);
    const RangeImage b = project(mirrored);

    // Boundary-bin ties aside, each occupied pixel maps to the mirrored column.
    std::size_t checked = 0, mirrored_ok = 0;
    for (int r = 0; r < a.height; ++r)
        for (int c = 0; c < a.width; ++c) {
            if (!a.occupied(r, c)) continue;
            ++checked;
            const int mc = a.width - 1 - c;
            if (b.occupied(r, mc) &&
                std::abs(b.range[b.idx(r, mc)] - a.range[a.idx(r, c)]) < 1e-9)
                ++mirrored_ok;
        }
    REQUIRE(checked > 0);
    CHECK(double(mirrored_ok) / double(checked) > 0.98);
}

TEST_CASE("occupied pixel count bounded by in-view points") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    RawScan scan;
    for (int i = 0; i < 5000; ++i) {
        const double x = std::abs(u(rng)) + 1.0;
        scan.points.push_back({static_cast<float>(x), static_cast<float>(u(rng)),
                               static_cast<float>(u(rng) * 0.05), 0.5f});
    }
    const RangeImage img = project(scan);
    CHECK(img.occupied_count() <= scan.points.size() - img.dropped_out_of_fov);
    CHECK(img.occupied_count() <= static_cast<std::size_t>(64 * 451));
}
