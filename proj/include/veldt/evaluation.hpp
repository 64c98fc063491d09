#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "veldt/geometry.hpp"

namespace veldt {

// One labeled or tracked rectangle in a frame, world frame ground plane.
struct EvalBox {
    int id = -1;
    RectBEV rect;
};

struct FrameMatchResult {
    std::vector<std::pair<int, int>> matches;  // (gt id, track id)
    int false_positives = 0;
    int false_negatives = 0;
    int id_switches = 0;
};

// Greedy matching by descending overlap with a continuation preference: a
// ground-truth box keeps its previous track whenever that pair still clears
// the threshold. An id switch is counted when a matched gt changes track.
inline FrameMatchResult match_frame(const std::vector<EvalBox>& gt,
                                    const std::vector<EvalBox>& tracks,
                                    std::map<int, int>& last_track_of_gt,
                                    double iou_threshold = 0.5) {
    FrameMatchResult res;
    std::vector<bool> gt_used(gt.size(), false), tr_used(tracks.size(), false);

    auto commit = [&](std::size_t gi, std::size_t ti) {
        gt_used[gi] = true;
        tr_used[ti] = true;
        const int gid = gt[gi].id, tid = tracks[ti].id;
        auto it = last_track_of_gt.find(gid);
        if (it != last_track_of_gt.end() && it->second != tid) ++res.id_switches;
        last_track_of_gt[gid] = tid;
        res.matches.push_back({gid, tid});
    };

    // continuation pass
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
        const auto it = last_track_of_gt.find(gt[gi].id);
        if (it == last_track_of_gt.end()) continue;
        for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
            if (tr_used[ti] || tracks[ti].id != it->second) continue;
            if (bev_iou(gt[gi].rect, tracks[ti].rect) >= iou_threshold) commit(gi, ti);
            break;
        }
    }

    // greedy pass over the remainder
    struct Cand {
        double iou;
        std::size_t gi, ti;
    };
    std::vector<Cand> cands;
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
        if (gt_used[gi]) continue;
        for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
            if (tr_used[ti]) continue;
            const double iou = bev_iou(gt[gi].rect, tracks[ti].rect);
            if (iou >= iou_threshold) cands.push_back({iou, gi, ti});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.gi != b.gi) return a.gi < b.gi;
        return a.ti < b.ti;
    });
    for (const auto& c : cands) {
        if (gt_used[c.gi] || tr_used[c.ti]) continue;
        commit(c.gi, c.ti);
    }

    for (std::size_t gi = 0; gi < gt.size(); ++gi)
        if (!gt_used[gi]) ++res.false_negatives;
    for (std::size_t ti = 0; ti < tracks.size(); ++ti)
        if (!tr_used[ti]) ++res.false_positives;
    return res;
}

// Life-span coverage classes at the 80% / 20% thresholds.
inline void mt_pt_ml(const std::vector<double>& coverages, double& mt, double& pt, double& ml) {
    if (coverages.empty()) {
        mt = pt = ml = 0.0;
        return;
    }
    int n_mt = 0, n_ml = 0;
    for (double c : coverages) {
        if (c >= 0.8) ++n_mt;
        else if (c < 0.2) ++n_ml;
    }
    const double n = double(coverages.size());
    mt = n_mt / n;
    ml = n_ml / n;
    pt = 1.0 - mt - ml;
}

struct ErrorTotals {
    int64_t gt = 0;   // ground-truth object-frames
    int64_t fn = 0;
    int64_t fp = 0;
    int64_t ids = 0;
    int64_t matches = 0;
    int64_t frames = 0;
};

// Percentage in (-inf, 100]; negative when the error count exceeds the number
// of ground-truth object-frames.
inline double mota(const ErrorTotals& t) {
    if (t.gt <= 0) throw std::invalid_argument("mota: no ground-truth object-frames");
    return 100.0 * (1.0 - double(t.fn + t.fp + t.ids) / double(t.gt));
}

struct TrackingMetrics {
    double mt = 0, pt = 0, ml = 0;
    double recall = 0, precision = 0;
    double false_alarm_rate = 0;  // FP per frame
    double mota = 0;
    ErrorTotals totals;
    int trajectories = 0;
};

// Sequence-level accumulator; feed frames in order.
class MetricsAccumulator {
public:
    void add_frame(const std::vector<EvalBox>& gt, const std::vector<EvalBox>& tracks,
                   double iou_threshold = 0.5) {
        const FrameMatchResult r = match_frame(gt, tracks, last_track_of_gt_, iou_threshold);
        totals_.gt += static_cast<int64_t>(gt.size());
        totals_.fn += r.false_negatives;
        totals_.fp += r.false_positives;
        totals_.ids += r.id_switches;
        totals_.matches += static_cast<int64_t>(r.matches.size());
        totals_.frames += 1;
        for (const auto& b : gt) ++gt_frames_[b.id];
        for (const auto& [gid, tid] : r.matches) ++gt_matched_[gid];
    }

    TrackingMetrics finalize() const {
        TrackingMetrics m;
        m.totals = totals_;
        std::vector<double> cov;
        for (const auto& [gid, frames] : gt_frames_) {
            const auto it = gt_matched_.find(gid);
            const int64_t matched = it == gt_matched_.end() ? 0 : it->second;
            cov.push_back(double(matched) / double(frames));
        }
        m.trajectories = static_cast<int>(cov.size());
        mt_pt_ml(cov, m.mt, m.pt, m.ml);
        m.recall = totals_.gt > 0 ? double(totals_.matches) / double(totals_.gt) : 0.0;
        const int64_t reported = totals_.matches + totals_.fp;
        m.precision = reported > 0 ? double(totals_.matches) / double(reported) : 0.0;
        m.false_alarm_rate = totals_.frames > 0 ? double(totals_.fp) / double(totals_.frames) : 0.0;
        m.mota = totals_.gt > 0 ? mota(totals_) : 0.0;
        return m;
    }

private:
    ErrorTotals totals_;
    std::map<int, int> last_track_of_gt_;
    std::map<int, int64_t> gt_frames_, gt_matched_;
};

// Merge per-sequence metrics into one report (totals are added; coverage
// classes are re-derived from the per-sequence trajectory counts).
inline TrackingMetrics merge_metrics(const std::vector<TrackingMetrics>& per_seq) {
    TrackingMetrics m;
    double mt_w = 0, pt_w = 0, ml_w = 0;
    int traj = 0;
    for (const auto& s : per_seq) {
        m.totals.gt += s.totals.gt;
        m.totals.fn += s.totals.fn;
        m.totals.fp += s.totals.fp;
        m.totals.ids += s.totals.ids;
        m.totals.matches += s.totals.matches;
        m.totals.frames += s.totals.frames;
        mt_w += s.mt * s.trajectories;
        pt_w += s.pt * s.trajectories;
        ml_w += s.ml * s.trajectories;
        traj += s.trajectories;
    }
    m.trajectories = traj;
    if (traj > 0) {
        m.mt = mt_w / traj;
        m.pt = pt_w / traj;
        m.ml = ml_w / traj;
    }
    m.recall = m.totals.gt > 0 ? double(m.totals.matches) / double(m.totals.gt) : 0.0;
    const int64_t reported = m.totals.matches + m.totals.fp;
    m.precision = reported > 0 ? double(m.totals.matches) / double(reported) : 0.0;
    m.false_alarm_rate = m.totals.frames > 0 ? double(m.totals.fp) / double(m.totals.frames) : 0.0;
    m.mota = m.totals.gt > 0 ? mota(m.totals) : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Point-wise detector quality, averaged per scan and then across scans.
// A scan with no labeled vehicle points contributes recall 1 and is flagged.

struct PointwisePR {
    double precision = 0;
    double recall = 0;
    int scans = 0;
    int scans_without_vehicles = 0;
};

class PointwisePRAccumulator {
public:
    void add_scan(const std::vector<float>& scores, const std::vector<uint8_t>& gt_classes,
                  double threshold = 0.5) {
        int64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool pred = scores[i] >= threshold;
            const bool truth = gt_classes[i] == 2;
            if (pred && truth) ++tp;
            else if (pred && !truth) ++fp;
            else if (!pred && truth) ++fn;
        }
        double prec = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 1.0;
        double rec;
        if (tp + fn == 0) {
            rec = 1.0;
            ++no_vehicle_scans_;
        } else {
            rec = double(tp) / double(tp + fn);
        }
        prec_sum_ += prec;
        rec_sum_ += rec;
        ++scans_;
    }

    PointwisePR finalize() const {
        PointwisePR r;
        r.scans = scans_;
        r.scans_without_vehicles = no_vehicle_scans_;
        if (scans_ > 0) {
            r.precision = prec_sum_ / scans_;
            r.recall = rec_sum_ / scans_;
        }
        return r;
    }

private:
    double prec_sum_ = 0, rec_sum_ = 0;
    int scans_ = 0, no_vehicle_scans_ = 0;
};

}  // namespace veldt
