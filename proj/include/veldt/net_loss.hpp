#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "veldt/tensor.hpp"

namespace veldt {

// Class-imbalance and per-resolution weights for the multi-resolution
// weighted cross-entropy objective.
struct LossConfig {
    double omega = 25.0;               // misclassification weight for the vehicle class
    double lambda[3] = {1.0, 0.7, 0.5};  // per-resolution weights, fine head last
};

// Reduce a full-resolution class grid to a coarser head resolution by integer
// factors. Majority class per cell among occupied source pixels; the vehicle
// class wins ties; cells with no occupied source pixel stay empty.
inline ClassGrid downsample_gt(const ClassGrid& gt, int fh, int fw) {
    if (fh < 1 || fw < 1 || gt.h % fh != 0 || gt.w % fw != 0)
        throw std::runtime_error("ground truth not divisible by downsample factor");
    ClassGrid out(gt.n, gt.h / fh, gt.w / fw);
    for (int ni = 0; ni < gt.n; ++ni) {
        for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
                int bg = 0, veh = 0;
                for (int dy = 0; dy < fh; ++dy)
                    for (int dx = 0; dx < fw; ++dx) {
                        const uint8_t c = gt.at(ni, y * fh + dy, x * fw + dx);
                        if (c == 1) ++bg;
                        else if (c == 2) ++veh;
                    }
                out.at(ni, y, x) = (bg + veh == 0) ? 0 : (veh >= bg ? 2 : 1);
            }
        }
    }
    return out;
}

// Weighted cross entropy over occupied cells; two logit channels
// (background, vehicle). Returns the summed loss and its exact gradient.
template <typename T>
std::pair<double, Tensor4<T>> wce_loss(const Tensor4<T>& logits, const ClassGrid& gt,
                                       const LossConfig& cfg) {
    if (logits.c != 2 || logits.n != gt.n || logits.h != gt.h || logits.w != gt.w)
        throw std::runtime_error("loss resolution mismatch: logits " + logits.shape_str());
    Tensor4<T> dlogits(logits.n, logits.c, logits.h, logits.w);
    double loss = 0.0;
    for (int ni = 0; ni < logits.n; ++ni) {
        for (int y = 0; y < logits.h; ++y) {
            for (int x = 0; x < logits.w; ++x) {
                const uint8_t cls = gt.at(ni, y, x);
                if (cls == 0) continue;
                const double s0 = logits.at(ni, 0, y, x);
                const double s1 = logits.at(ni, 1, y, x);
                const double m = std::max(s0, s1);
                const double e0 = std::exp(s0 - m), e1 = std::exp(s1 - m);
                const double z = e0 + e1;
                const double p0 = e0 / z, p1 = e1 / z;
                const int yi = (cls == 2) ? 1 : 0;
                const double w = (cls == 2) ? cfg.omega : 1.0;
                loss -= w * std::log(std::max(yi == 1 ? p1 : p0, 1e-300));
                dlogits.at(ni, 0, y, x) = static_cast<T>(w * (p0 - (yi == 0 ? 1.0 : 0.0)));
                dlogits.at(ni, 1, y, x) = static_cast<T>(w * (p1 - (yi == 1 ? 1.0 : 0.0)));
            }
        }
    }
    return {loss, std::move(dlogits)};
}

inline double total_loss(const double per_resolution[3], const LossConfig& cfg) {
    return cfg.lambda[0] * per_resolution[0] + cfg.lambda[1] * per_resolution[1] +
           cfg.lambda[2] * per_resolution[2];
}

}  // namespace veldt
