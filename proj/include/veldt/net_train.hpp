#pragma once

#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "veldt/net.hpp"

namespace veldt {

// One projected, labeled sweep ready for the optimizer.
struct TrainSample {
    Tensor4<float> input;  // (1, 2, rows, cols) cropped to the network width
    ClassGrid gt;          // matching class grid
};

inline TrainSample make_train_sample(const RangeImage& img, const GroundTruthImage& gt, int net_cols) {
    return {make_net_input<float>(img, net_cols), make_gt_grid(gt, net_cols)};
}

struct TrainConfig {
    int iterations = 300;
    int batch = 2;
    double lr = 1e-3;
    double lr_halve_at = 0.75;  // fraction of the budget after which lr is halved
    uint64_t seed = 1;
    LossConfig loss;
};

struct TrainLogRow {
    int64_t iteration = 0;
    double loss_r1 = 0, loss_r2 = 0, loss_r3 = 0, total = 0;
};

// Multi-resolution loss on one forward pass; seeds the backward gradients
// with their resolution weights applied.
template <typename T>
double multi_res_loss(const NetForward<T>& f, const ClassGrid& gt, const LossConfig& cfg,
                      double per_res[3], Tensor4<T>& dl1, Tensor4<T>& dl2, Tensor4<T>& dl3) {
    const ClassGrid g1 = downsample_gt(gt, gt.h / f.logits_r1.h, gt.w / f.logits_r1.w);
    const ClassGrid g2 = downsample_gt(gt, gt.h / f.logits_r2.h, gt.w / f.logits_r2.w);
    auto [l1, d1] = wce_loss(f.logits_r1, g1, cfg);
    auto [l2, d2] = wce_loss(f.logits_r2, g2, cfg);
    auto [l3, d3] = wce_loss(f.logits_r3, gt, cfg);
    per_res[0] = l1;
    per_res[1] = l2;
    per_res[2] = l3;
    dl1 = std::move(d1);
    dl2 = std::move(d2);
    dl3 = std::move(d3);
    for (T& v : dl1.v) v *= static_cast<T>(cfg.lambda[0]);
    for (T& v : dl2.v) v *= static_cast<T>(cfg.lambda[1]);
    for (T& v : dl3.v) v *= static_cast<T>(cfg.lambda[2]);
    return total_loss(per_res, cfg);
}

// Deterministic desk-scale trainer: uniform batch sampling, 50% horizontal
// flip, Adam with the lr halved at the configured fraction of the budget.
// The batch RNG is derived per iteration so a resumed run replays exactly
// the stream a straight run would have seen.
// `total_budget` covers resumed runs; 0 means the budget equals `start + iterations`.
inline std::vector<TrainLogRow> train_net(NetParams<float>& params,
                                          const std::vector<TrainSample>& samples,
                                          const TrainConfig& cfg, AdamState<float>& opt,
                                          int64_t start_iteration = 0, int64_t total_budget = 0) {
    if (samples.empty()) throw std::runtime_error("training dataset is empty");
    const int64_t budget = total_budget > 0 ? total_budget : start_iteration + cfg.iterations;

    const int rows = samples[0].input.h, cols = samples[0].input.w;
    std::vector<TrainLogRow> log;
    log.reserve(static_cast<std::size_t>(cfg.iterations));

    for (int64_t it = start_iteration; it < start_iteration + cfg.iterations; ++it) {
        std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(it));
        Tensor4<float> batch(cfg.batch, 2, rows, cols);
        ClassGrid gt(cfg.batch, rows, cols);
        std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
        for (int b = 0; b < cfg.batch; ++b) {
            const TrainSample& s = samples[pick(rng)];
            Tensor4<float> x = s.input;
            ClassGrid g = s.gt;
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.5) hflip_sample(x, g);
            std::copy(x.v.begin(), x.v.end(), batch.slice(b));
            std::copy(g.v.begin(), g.v.end(), gt.v.begin() + static_cast<std::ptrdiff_t>(b) * rows * cols);
        }

        NetForward<float> f = net_forward(params, batch, /*train=*/true);
        double per_res[3];
        Tensor4<float> dl1, dl2, dl3;
        const double total = multi_res_loss(f, gt, cfg.loss, per_res, dl1, dl2, dl3);
        NetParams<float> grads = net_backward(params, f, dl1, dl2, dl3);

        const double lr = (it >= static_cast<int64_t>(cfg.lr_halve_at * double(budget)))
                              ? 0.5 * cfg.lr
                              : cfg.lr;
        adam_step(params, grads, opt, lr);
        log.push_back({it, per_res[0], per_res[1], per_res[2], total});
    }
    return log;
}

inline void append_train_log(const std::string& path, const std::vector<TrainLogRow>& rows,
                             bool write_header) {
    std::ofstream out(path, write_header ? std::ios::trunc : std::ios::app);
    if (!out) throw std::runtime_error("cannot write training log: " + path);
    if (write_header) out << "iteration,loss_r1,loss_r2,loss_r3,total\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.6f,%.6f\n",
                      static_cast<long long>(r.iteration), r.loss_r1, r.loss_r2, r.loss_r3, r.total);
        out << buf;
    }
}

// Fraction of occupied pixels whose thresholded vehicle probability matches
// the ground truth (eval mode).
inline double point_accuracy(NetParams<float>& params, const std::vector<RangeImage>& images,
                             const std::vector<GroundTruthImage>& gts, double threshold = 0.5) {
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::vector<float> probs = net_predict(params, images[i]);
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const uint8_t cls = gts[i].cls[k];
            if (cls == 0) continue;
            const uint8_t pred = probs[k] >= threshold ? 2 : 1;
            ++total;
            if (pred == cls) ++correct;
        }
    }
    return total == 0 ? 1.0 : double(correct) / double(total);
}

}  // namespace veldt
