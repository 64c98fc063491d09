#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "veldt/evaluation.hpp"

using namespace veldt;

namespace {

EvalBox box(int id, double cx, double cy, double yaw = 0.0, double l = 4.0, double w = 2.0) {
    return {id, {cx, cy, yaw, l, w}};
}

// Optimal assignment by permutation search (scenes of <= 4 boxes).
int optimal_match_count(const std::vector<EvalBox>& gt, const std::vector<EvalBox>& tracks,
                        double thr) {
    std::vector<int> idx(tracks.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    int best = 0;
    std::sort(idx.begin(), idx.end());
    do {
        int count = 0;
        const std::size_t n = std::min(gt.size(), tracks.size());
        for (std::size_t g = 0; g < n; ++g)
            if (bev_iou(gt[g].rect, tracks[static_cast<std::size_t>(idx[g])].rect) >= thr) ++count;
        best = std::max(best, count);
    } while (std::next_permutation(idx.begin(), idx.end()));
    return best;
}

}  // namespace

TEST_CASE("bev iou basics") {
    const RectBEV a{0, 0, 0, 4, 2};
    CHECK(bev_iou(a, a) == Catch::Approx(1.0));
    const RectBEV b{10, 10, 0, 4, 2};
    CHECK(bev_iou(a, b) == 0.0);
    const RectBEV c{1, 0, 0, 4, 2};  // half-length shift
    CHECK(bev_iou(a, c) == Catch::Approx(3.0 * 2.0 / (2 * 8.0 - 6.0)));
    // rotation-consistent: same rectangle expressed with swapped dims
    const RectBEV d{0, 0, 0.5 * kPi, 2, 4};
    CHECK(bev_iou(a, d) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("match_frame basics") {
    std::map<int, int> memory;

    SECTION("identical boxes: one match") {
        const auto r = match_frame({box(0, 5, 5)}, {box(100, 5, 5)}, memory);
        CHECK(r.matches.size() == 1);
        CHECK(r.false_positives == 0);
        CHECK(r.false_negatives == 0);
    }
    SECTION("disjoint boxes: one FP and one FN") {
        const auto r = match_frame({box(0, 5, 5)}, {box(100, 50, 50)}, memory);
        CHECK(r.matches.empty());
        CHECK(r.false_positives == 1);
        CHECK(r.false_negatives == 1);
    }
    SECTION("id switch counted when the track changes") {
        auto r1 = match_frame({box(7, 0, 0)}, {box(100, 0.1, 0)}, memory);
        CHECK(r1.id_switches == 0);
        auto r2 = match_frame({box(7, 0, 0)}, {box(101, -0.1, 0)}, memory);
        CHECK(r2.id_switches == 1);
        auto r3 = match_frame({box(7, 0, 0)}, {box(101, 0, 0)}, memory);
        CHECK(r3.id_switches == 0);
    }
    SECTION("continuation preferred over a higher-overlap newcomer") {
        std::map<int, int> mem;
        match_frame({box(1, 0, 0)}, {box(50, 0.2, 0)}, mem);
        // track 50 still clears the threshold; track 51 overlaps slightly better
        const auto r = match_frame({box(1, 0, 0)}, {box(51, 0.05, 0), box(50, 0.3, 0)}, mem);
        REQUIRE(r.matches.size() == 1);
        CHECK(r.matches[0].second == 50);
        CHECK(r.id_switches == 0);
    }
}

TEST_CASE("coverage classes") {
    double mt, pt, ml;
    mt_pt_ml({0.9}, mt, pt, ml);
    CHECK(mt == 1.0);
    mt_pt_ml({0.1}, mt, pt, ml);
    CHECK(ml == 1.0);
    mt_pt_ml({0.5}, mt, pt, ml);
    CHECK(pt == 1.0);
    mt_pt_ml({0.8, 0.19, 0.5, 0.2}, mt, pt, ml);
    CHECK(mt == Catch::Approx(0.25));
    CHECK(ml == Catch::Approx(0.25));
    CHECK(pt == Catch::Approx(0.5));
    CHECK(mt + pt + ml == Catch::Approx(1.0));
}

TEST_CASE("mota arithmetic") {
    SECTION("hand scenario: 10 gt, 2 fn, 1 fp, 1 ids gives 60%") {
        ErrorTotals t;
        t.gt = 10;
        t.fn = 2;
        t.fp = 1;
        t.ids = 1;
        CHECK(mota(t) == Catch::Approx(60.0));
    }
    SECTION("zero errors give 100%") {
        ErrorTotals t;
        t.gt = 12;
        CHECK(mota(t) == Catch::Approx(100.0));
    }
    SECTION("error counts above gt go negative") {
        ErrorTotals t;
        t.gt = 10;
        t.fp = 15;
        CHECK(mota(t) == Catch::Approx(-50.0));
    }
    SECTION("zero gt rejected") {
        ErrorTotals t;
        CHECK_THROWS(mota(t));
    }
}

TEST_CASE("accumulator reproduces the 60% scenario") {
    // 5 frames x 2 gt objects = 10 gt; drop the second object in two frames
    // (2 FN), add a spurious track once (1 FP), switch an id once (1 IDS)
    MetricsAccumulator acc;
    for (int f = 0; f < 5; ++f) {
        std::vector<EvalBox> gt = {box(0, 0, 0), box(1, 10, 0)};
        std::vector<EvalBox> tracks;
        tracks.push_back(box(f < 3 ? 100 : 101, 0, 0));  // id switch at frame 3
        if (f != 1 && f != 2) tracks.push_back(box(200, 10, 0));  // misses object 1 twice
        if (f == 4) tracks.push_back(box(300, 50, 50));           // one false positive
        acc.add_frame(gt, tracks);
    }
    const TrackingMetrics m = acc.finalize();
    CHECK(m.totals.gt == 10);
    CHECK(m.totals.fn == 2);
    CHECK(m.totals.fp == 1);
    CHECK(m.totals.ids == 1);
    CHECK(m.mota == Catch::Approx(60.0));
    CHECK(m.false_alarm_rate == Catch::Approx(0.2));
    // object 0 covered 5/5 (MT), object 1 covered 3/5 (PT)
    CHECK(m.mt == Catch::Approx(0.5));
    CHECK(m.pt == Catch::Approx(0.5));
    CHECK(m.ml == 0.0);
}

TEST_CASE("greedy matching is near-optimal on small random scenes") {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> upos(-10.0, 10.0);
    std::uniform_real_distribution<double> ujit(-1.2, 1.2);
    std::uniform_real_distribution<double> uyaw(-kPi, kPi);
    int agree = 0, total = 0, gap_total = 0;
    for (int scene = 0; scene < 200; ++scene) {
        const int ng = 1 + static_cast<int>(rng() % 4);
        const int nt = 1 + static_cast<int>(rng() % 4);
        std::vector<EvalBox> gt, tracks;
        for (int i = 0; i < ng; ++i) gt.push_back(box(i, upos(rng), upos(rng), uyaw(rng)));
        for (int i = 0; i < nt; ++i) {
            // jitter around a gt box when possible so overlaps are common
            const EvalBox& base = gt[static_cast<std::size_t>(i % ng)];
            tracks.push_back(box(100 + i, base.rect.cx + ujit(rng), base.rect.cy + ujit(rng),
                                 base.rect.yaw));
        }
        std::map<int, int> memory;
        const auto r = match_frame(gt, tracks, memory);
        const int opt = optimal_match_count(gt, tracks, 0.5);
        ++total;
        if (static_cast<int>(r.matches.size()) == opt) ++agree;
        gap_total += opt - static_cast<int>(r.matches.size());
        REQUIRE(static_cast<int>(r.matches.size()) <= opt);
    }
    INFO("greedy == optimal on " << agree << "/" << total << ", total gap " << gap_total);
    CHECK(double(agree) / double(total) >= 0.95);
}

TEST_CASE("pointwise precision and recall") {
    PointwisePRAccumulator acc;
    SECTION("perfect prediction") {
        acc.add_scan({1.f, 0.f, 1.f}, {2, 1, 2});
        const auto r = acc.finalize();
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
    }
    SECTION("all-background prediction on a scan with vehicles") {
        acc.add_scan({0.f, 0.f, 0.f}, {2, 1, 2});
        const auto r = acc.finalize();
        CHECK(r.recall == 0.0);
    }
    SECTION("hand count: 8 tp, 2 fp, 2 fn") {
        std::vector<float> scores;
        std::vector<uint8_t> gt;
        for (int i = 0; i < 8; ++i) {
            scores.push_back(1.f);
            gt.push_back(2);
        }
        for (int i = 0; i < 2; ++i) {
            scores.push_back(1.f);
            gt.push_back(1);
        }
        for (int i = 0; i < 2; ++i) {
            scores.push_back(0.f);
            gt.push_back(2);
        }
        acc.add_scan(scores, gt);
        const auto r = acc.finalize();
        CHECK(r.precision == Catch::Approx(0.8));
        CHECK(r.recall == Catch::Approx(0.8));
    }
    SECTION("scan without vehicles contributes recall 1 and is flagged") {
        acc.add_scan({0.f, 1.f}, {1, 1});
        const auto r = acc.finalize();
        CHECK(r.recall == 1.0);
        CHECK(r.scans_without_vehicles == 1);
    }
    SECTION("order invariance") {
        std::mt19937_64 rng(7);
        std::vector<float> scores;
        std::vector<uint8_t> gt;
        for (int i = 0; i < 200; ++i) {
            scores.push_back(static_cast<float>(rng() % 100) / 100.f);
            gt.push_back(rng() % 2 ? 2 : 1);
        }
        PointwisePRAccumulator a1, a2;
        a1.add_scan(scores, gt);
        std::vector<std::size_t> perm(scores.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<float> s2(scores.size());
        std::vector<uint8_t> g2(gt.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            s2[i] = scores[perm[i]];
            g2[i] = gt[perm[i]];
        }
        a2.add_scan(s2, g2);
        CHECK(a1.finalize().precision == a2.finalize().precision);
        CHECK(a1.finalize().recall == a2.finalize().recall);
    }
}

TEST_CASE("mota never exceeds 100 and hits it only with zero errors") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) {
        ErrorTotals t;
        t.gt = 1 + static_cast<int64_t>(rng() % 50);
        t.fn = static_cast<int64_t>(rng() % 10);
        t.fp = static_cast<int64_t>(rng() % 10);
        t.ids = static_cast<int64_t>(rng() % 5);
        const double m = mota(t);
        CHECK(m <= 100.0);
        if (t.fn + t.fp + t.ids == 0) CHECK(m == 100.0);
        else CHECK(m < 100.0);
    }
}
