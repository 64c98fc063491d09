#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "veldt/pipeline.hpp"

using namespace veldt;

namespace {

namespace fs = std::filesystem;

struct TempDataset {
    fs::path root;

    explicit TempDataset(const std::string& tag, const SynthScene& scene) {
        root = fs::temp_directory_path() / ("veldt_ds_" + tag);
        fs::remove_all(root);
        write_synth_sequence(root.string(), "0000", scene);
    }
    ~TempDataset() { fs::remove_all(root); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("synthetic sequence round trips through the dataset loader") {
    SynthScene scene = make_benchmark_scene(5, 8);
    TempDataset ds("load", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    CHECK(seq.frames() == 8);
    REQUIRE(seq.labels.count(0) == 1);
    CHECK(seq.labels.at(0).size() >= 3);

    // labels must overlay the rendered vehicle points
    const RawScan scan = read_scan(seq.scan_paths[0], 0);
    const auto classes = label_points(scan, seq.labels.at(0));
    std::size_t vehicle_pts = 0;
    for (uint8_t c : classes)
        if (c == kClassVehicle) ++vehicle_pts;
    CHECK(vehicle_pts > 100);
}

TEST_CASE("oracle observations land on the labeled vehicles") {
    SynthScene scene = make_benchmark_scene(7, 4);
    TempDataset ds("obs", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    DetectorContext det;
    det.kind = DetectorKind::Oracle;

    const RawScan scan = read_scan(seq.scan_paths[0], 0);
    const auto obs = observe_frame(scan, seq, 0, det, cfg);
    REQUIRE(obs.size() >= 3);  // both dense and at least one sparse vehicle
    for (const auto& o : obs) {
        bool near_label = false;
        for (const auto& b : seq.labels.at(0)) {
            const RectBEV fp = o.footprint();
            if (std::hypot(fp.cx - b.center.x(), fp.cy - b.center.y()) < 2.5) near_label = true;
        }
        CHECK(near_label);
    }
}

TEST_CASE("geometric observations include wall clutter but skip sparse vehicles") {
    SynthScene scene = make_benchmark_scene(11, 4);
    TempDataset ds("geo", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    DetectorContext det;
    det.kind = DetectorKind::Geometric;

    const RawScan scan = read_scan(seq.scan_paths[0], 0);
    const auto obs = observe_frame(scan, seq, 0, det, cfg);

    int near_wall = 0, near_sparse = 0;
    for (const auto& o : obs) {
        const RectBEV fp = o.footprint();
        for (const auto& w : scene.walls)
            if (std::hypot(fp.cx - w.x, fp.cy - w.y) < 3.5) ++near_wall;
        for (const auto& v : scene.vehicles)
            if (v.target_points > 0 && std::hypot(fp.cx - v.x, fp.cy - v.y) < 2.5) ++near_sparse;
    }
    CHECK(near_wall >= 1);
    CHECK(near_sparse == 0);
}

TEST_CASE("track command produces a deterministic CSV") {
    SynthScene scene = make_benchmark_scene(13, 6);
    TempDataset ds("det", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    DetectorContext det;
    det.kind = DetectorKind::Oracle;

    const auto csv_a = (ds.root / "tracks_a.csv").string();
    const auto csv_b = (ds.root / "tracks_b.csv").string();
    cmd_track(seq, cfg, det, csv_a);
    cmd_track(seq, cfg, det, csv_b);
    CHECK(slurp(csv_a) == slurp(csv_b));

    const auto rows = read_tracks_csv(csv_a);
    CHECK(!rows.empty());
}

TEST_CASE("observation extraction is independent of the job count") {
    SynthScene scene = make_benchmark_scene(17, 6);
    TempDataset ds("jobs", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    DetectorContext det;
    det.kind = DetectorKind::Geometric;

    PipelineConfig cfg1;
    cfg1.jobs = 1;
    PipelineConfig cfg3;
    cfg3.jobs = 3;
    const auto a = observe_sequence(seq, det, cfg1);
    const auto b = observe_sequence(seq, det, cfg3);
    REQUIRE(a.size() == b.size());
    for (std::size_t f = 0; f < a.size(); ++f) {
        REQUIRE(a[f].size() == b[f].size());
        for (std::size_t i = 0; i < a[f].size(); ++i) {
            CHECK(a[f][i].x == b[f][i].x);
            CHECK(a[f][i].theta == b[f][i].theta);
        }
    }
}

TEST_CASE("evaluate on tracker output: oracle pipeline scores well") {
    SynthScene scene = make_benchmark_scene(23, 12);
    TempDataset ds("eval", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    DetectorContext det;
    det.kind = DetectorKind::Oracle;

    const auto csv = (ds.root / "tracks.csv").string();
    cmd_track(seq, cfg, det, csv);
    const TrackingMetrics m = cmd_evaluate(seq, cfg, csv);
    CHECK(m.totals.gt > 0);
    CHECK(m.recall > 0.5);
    CHECK(m.mota > 0.0);
}

TEST_CASE("evaluate rejects frames outside the sequence") {
    SynthScene scene = make_benchmark_scene(29, 3);
    TempDataset ds("reject", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    const auto csv = (ds.root / "bad.csv").string();
    {
        std::ofstream out(csv);
        out << "frame,id,x,y,theta,v,rho,w,l,h,weight_leader\n";
        out << "99,0,0,0,0,0,0,2,4,1.5,1\n";
    }
    CHECK_THROWS_WITH(cmd_evaluate(seq, cfg, csv), Catch::Matchers::ContainsSubstring("frame"));
}

TEST_CASE("project command writes stats and greymaps") {
    SynthScene scene = make_benchmark_scene(31, 3);
    TempDataset ds("proj", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    const auto out_dir = (ds.root / "proj").string();
    const ProjectStats stats = cmd_project(seq, cfg, out_dir);
    CHECK(stats.frames == 3);
    CHECK(stats.occupied > 0);
    CHECK(fs::exists(fs::path(out_dir) / "000000_range.pgm"));
    CHECK(fs::exists(fs::path(out_dir) / "occupancy.csv"));

    // widening the field of view by whole bins keeps the binning aligned,
    // so the occupied count is monotone non-decreasing
    PipelineConfig wide = cfg;
    wide.projection.azimuth_min_deg = -58.5;  // 100 extra bins per side
    wide.projection.azimuth_max_deg = 58.5;
    const ProjectStats stats_wide = cmd_project(seq, wide, (ds.root / "proj2").string(), false);
    CHECK(stats_wide.occupied >= stats.occupied);
}

TEST_CASE("truck inclusion flag changes the ground-truth set") {
    SynthScene scene = make_benchmark_scene(41, 3);
    scene.vehicles[0].cls = ObjectClass::Truck;
    TempDataset ds("truck", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig with;
    PipelineConfig without;
    without.eval_include_trucks = false;
    const auto g_with = gt_eval_boxes(seq, 0, with);
    const auto g_without = gt_eval_boxes(seq, 0, without);
    CHECK(g_with.size() == g_without.size() + 1);
}

TEST_CASE("observation and metrics dumps carry the documented headers") {
    SynthScene scene = make_benchmark_scene(43, 2);
    TempDataset ds("csv", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    DetectorContext det;
    det.kind = DetectorKind::Oracle;
    const auto obs_csv = (ds.root / "obs.csv").string();
    cmd_detect(seq, cfg, det, obs_csv);
    std::ifstream in(obs_csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "frame,x,y,theta,w,l,h,vehicleness,c,corner_flag");

    TrackingMetrics m;
    m.totals.gt = 1;
    const auto metrics_csv = (ds.root / "metrics.csv").string();
    write_metrics_csv(metrics_csv, m);
    std::ifstream min(metrics_csv);
    std::getline(min, header);
    CHECK(header == "metric,value");
}

TEST_CASE("geometric detector on a plane-only scene yields zero tracks") {
    SynthScene scene;  // ground only
    scene.frames = 3;
    scene.seed = 3;
    TempDataset ds("plane", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000", /*need_labels=*/false);
    PipelineConfig cfg;
    DetectorContext det;
    det.kind = DetectorKind::Geometric;
    const auto csv = (ds.root / "tracks.csv").string();
    cmd_track(seq, cfg, det, csv);
    CHECK(read_tracks_csv(csv).empty());
}

TEST_CASE("tracks equal to the ground truth score MOTA 100") {
    SynthScene scene = make_benchmark_scene(47, 6);
    TempDataset ds("perfect", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;

    // write a tracks CSV straight from the labels (anchored canonical form
    // reconstructs center + rotate(l/2, w/2), so anchor = center - that)
    std::vector<TrackRow> rows;
    for (int f = 0; f < seq.frames(); ++f) {
        for (const auto& b : gt_eval_boxes(seq, f, cfg)) {
            TrackRow r;
            r.frame = f;
            r.id = b.id;
            r.theta = b.rect.yaw;
            r.l = b.rect.length;
            r.w = b.rect.width;
            const Vec2 anchor =
                Vec2{b.rect.cx, b.rect.cy} - rotate({0.5 * r.l, 0.5 * r.w}, r.theta);
            r.x = anchor.x;
            r.y = anchor.y;
            r.h = 1.6;
            r.weight_leader = 1.0;
            rows.push_back(r);
        }
    }
    const auto csv = (ds.root / "gt_tracks.csv").string();
    write_tracks_csv(csv, rows);
    const TrackingMetrics m = cmd_evaluate(seq, cfg, csv);
    CHECK(m.mota == Catch::Approx(100.0));
    CHECK(m.recall == Catch::Approx(1.0));
    CHECK(m.mt == Catch::Approx(1.0));
}

TEST_CASE("empty tracks give zero recall and non-positive MOTA") {
    SynthScene scene = make_benchmark_scene(53, 4);
    TempDataset ds("empty", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    const auto csv = (ds.root / "none.csv").string();
    write_tracks_csv(csv, {});
    const TrackingMetrics m = cmd_evaluate(seq, cfg, csv);
    CHECK(m.recall == 0.0);
    CHECK(m.mota <= 0.0);
}

TEST_CASE("missing scan directory reported with its path") {
    CHECK_THROWS_WITH(load_sequence("/tmp/veldt_nonexistent_root", "0000"),
                      Catch::Matchers::ContainsSubstring("velodyne"));
}

TEST_CASE("net detector requires a checkpoint") {
    SynthScene scene = make_benchmark_scene(37, 2);
    TempDataset ds("net", scene);
    const Sequence seq = load_sequence(ds.root.string(), "0000");
    PipelineConfig cfg;
    DetectorContext det;
    det.kind = DetectorKind::Net;
    det.net = nullptr;
    const RawScan scan = read_scan(seq.scan_paths[0], 0);
    CHECK_THROWS_WITH(observe_frame(scan, seq, 0, det, cfg),
                      Catch::Matchers::ContainsSubstring("checkpoint"));
}
