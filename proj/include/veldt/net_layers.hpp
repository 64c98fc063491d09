#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "veldt/tensor.hpp"

namespace veldt {

// Spatial geometry of a strided convolution. A deconvolution reuses the same
// geometry as the exact adjoint map, so the expanding path mirrors the
// contracting one without output-size ambiguity.
struct ConvGeom {
    int kh = 3, kw = 3;
    int sh = 1, sw = 1;
    int ph = 0, pw = 0;

    int out_h(int in_h) const { return (in_h + 2 * ph - kh) / sh + 1; }
    int out_w(int in_w) const { return (in_w + 2 * pw - kw) / sw + 1; }
};

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using MatXRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// He initialization: zero-mean Gaussian with variance 2/fan_in.
template <typename T>
void he_init(std::vector<T>& w, int fan_in, std::mt19937_64& rng) {
    if (fan_in <= 0) throw std::invalid_argument("he_init: fan_in must be positive");
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (T& x : w) x = static_cast<T>(dist(rng));
}

namespace detail {

// Gather (ic*kh*kw) x (oh*ow) patch matrix for one batch item.
template <typename T>
void im2col(const T* x, int c, int h, int w, const ConvGeom& g, MatX<T>& cols) {
    const int oh = g.out_h(h), ow = g.out_w(w);
    cols.resize(static_cast<Eigen::Index>(c) * g.kh * g.kw, static_cast<Eigen::Index>(oh) * ow);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const Eigen::Index col = static_cast<Eigen::Index>(oy) * ow + ox;
            Eigen::Index rowi = 0;
            for (int ci = 0; ci < c; ++ci) {
                const T* chan = x + static_cast<std::size_t>(ci) * h * w;
                for (int ky = 0; ky < g.kh; ++ky) {
                    const int iy = oy * g.sh - g.ph + ky;
                    for (int kx = 0; kx < g.kw; ++kx, ++rowi) {
                        const int ix = ox * g.sw - g.pw + kx;
                        cols(rowi, col) =
                            (iy >= 0 && iy < h && ix >= 0 && ix < w) ? chan[iy * w + ix] : T(0);
                    }
                }
            }
        }
    }
}

// Scatter-add the adjoint of im2col.
template <typename T>
void col2im(const MatX<T>& cols, int c, int h, int w, const ConvGeom& g, T* x) {
    const int oh = g.out_h(h), ow = g.out_w(w);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const Eigen::Index col = static_cast<Eigen::Index>(oy) * ow + ox;
            Eigen::Index rowi = 0;
            for (int ci = 0; ci < c; ++ci) {
                T* chan = x + static_cast<std::size_t>(ci) * h * w;
                for (int ky = 0; ky < g.kh; ++ky) {
                    const int iy = oy * g.sh - g.ph + ky;
                    for (int kx = 0; kx < g.kw; ++kx, ++rowi) {
                        const int ix = ox * g.sw - g.pw + kx;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w) chan[iy * w + ix] += cols(rowi, col);
                    }
                }
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution. Kernel layout (oc, ic, kh, kw) row-major; bias per output channel.

template <typename T>
struct ConvCache {
    std::vector<MatX<T>> cols;  // one patch matrix per batch item
    int in_c = 0, in_h = 0, in_w = 0;
};

template <typename T>
Tensor4<T> conv_forward(const Tensor4<T>& x, const std::vector<T>& kernel, const std::vector<T>& bias,
                        int oc, const ConvGeom& g, ConvCache<T>* cache = nullptr) {
    const int oh = g.out_h(x.h), ow = g.out_w(x.w);
    const Eigen::Index krows = static_cast<Eigen::Index>(x.c) * g.kh * g.kw;
    if (kernel.size() != static_cast<std::size_t>(oc) * krows)
        throw std::runtime_error("conv kernel shape mismatch for input " + x.shape_str());
    Tensor4<T> y(x.n, oc, oh, ow);
    Eigen::Map<const MatXRM<T>> K(kernel.data(), oc, krows);
    MatX<T> cols;
    if (cache) {
        cache->cols.resize(static_cast<std::size_t>(x.n));
        cache->in_c = x.c;
        cache->in_h = x.h;
        cache->in_w = x.w;
    }
    for (int ni = 0; ni < x.n; ++ni) {
        MatX<T>& cc = cache ? cache->cols[static_cast<std::size_t>(ni)] : cols;
        detail::im2col(x.slice(ni), x.c, x.h, x.w, g, cc);
        Eigen::Map<MatXRM<T>> Y(y.slice(ni), oc, static_cast<Eigen::Index>(oh) * ow);
        Y.noalias() = K * cc;
        for (int ci = 0; ci < oc; ++ci) Y.row(ci).array() += bias[static_cast<std::size_t>(ci)];
    }
    return y;
}

template <typename T>
void conv_backward(const Tensor4<T>& dy, const std::vector<T>& kernel, int oc, const ConvGeom& g,
                   const ConvCache<T>& cache, Tensor4<T>& dx, std::vector<T>& dkernel,
                   std::vector<T>& dbias) {
    const Eigen::Index krows = static_cast<Eigen::Index>(cache.in_c) * g.kh * g.kw;
    dx = Tensor4<T>(dy.n, cache.in_c, cache.in_h, cache.in_w);
    dkernel.assign(kernel.size(), T(0));
    dbias.assign(static_cast<std::size_t>(oc), T(0));
    Eigen::Map<const MatXRM<T>> K(kernel.data(), oc, krows);
    Eigen::Map<MatXRM<T>> dK(dkernel.data(), oc, krows);
    for (int ni = 0; ni < dy.n; ++ni) {
        Eigen::Map<const MatXRM<T>> dY(dy.slice(ni), oc,
                                       static_cast<Eigen::Index>(dy.h) * dy.w);
        const MatX<T>& cols = cache.cols[static_cast<std::size_t>(ni)];
        dK.noalias() += dY * cols.transpose();
        for (int ci = 0; ci < oc; ++ci) dbias[static_cast<std::size_t>(ci)] += dY.row(ci).sum();
        MatX<T> dcols = K.transpose() * dY;
        detail::col2im(dcols, cache.in_c, cache.in_h, cache.in_w, g, dx.slice(ni));
    }
}

// ---------------------------------------------------------------------------
// Transposed convolution: the adjoint of a convolution with geometry `g` that
// maps (out_h, out_w) -> (in_h, in_w). Kernel layout (ic, oc, kh, kw) row-major.

template <typename T>
struct DeconvCache {
    Tensor4<T> x;  // adjoint needs the input for the weight gradient
};

template <typename T>
Tensor4<T> deconv_forward(const Tensor4<T>& x, const std::vector<T>& kernel, const std::vector<T>& bias,
                          int oc, const ConvGeom& g, int out_h, int out_w,
                          DeconvCache<T>* cache = nullptr) {
    if (g.out_h(out_h) != x.h || g.out_w(out_w) != x.w)
        throw std::runtime_error("deconv geometry does not map " + std::to_string(out_h) + "x" +
                                 std::to_string(out_w) + " onto input " + x.shape_str());
    const Eigen::Index krows = static_cast<Eigen::Index>(oc) * g.kh * g.kw;
    if (kernel.size() != static_cast<std::size_t>(x.c) * krows)
        throw std::runtime_error("deconv kernel shape mismatch for input " + x.shape_str());
    Tensor4<T> y(x.n, oc, out_h, out_w);
    Eigen::Map<const MatXRM<T>> W(kernel.data(), x.c, krows);
    for (int ni = 0; ni < x.n; ++ni) {
        Eigen::Map<const MatXRM<T>> X(x.slice(ni), x.c, static_cast<Eigen::Index>(x.h) * x.w);
        MatX<T> cols = W.transpose() * X;
        detail::col2im(cols, oc, out_h, out_w, g, y.slice(ni));
        T* yp = y.slice(ni);
        for (int ci = 0; ci < oc; ++ci) {
            const T b = bias[static_cast<std::size_t>(ci)];
            T* chan = yp + static_cast<std::size_t>(ci) * out_h * out_w;
            for (int k = 0; k < out_h * out_w; ++k) chan[k] += b;
        }
    }
    if (cache) cache->x = x;
    return y;
}

template <typename T>
void deconv_backward(const Tensor4<T>& dy, const std::vector<T>& kernel, int oc, const ConvGeom& g,
                     const DeconvCache<T>& cache, Tensor4<T>& dx, std::vector<T>& dkernel,
                     std::vector<T>& dbias) {
    const Tensor4<T>& x = cache.x;
    const Eigen::Index krows = static_cast<Eigen::Index>(oc) * g.kh * g.kw;
    dx = Tensor4<T>(x.n, x.c, x.h, x.w);
    dkernel.assign(kernel.size(), T(0));
    dbias.assign(static_cast<std::size_t>(oc), T(0));
    Eigen::Map<const MatXRM<T>> W(kernel.data(), x.c, krows);
    Eigen::Map<MatXRM<T>> dW(dkernel.data(), x.c, krows);
    MatX<T> dcols;
    for (int ni = 0; ni < dy.n; ++ni) {
        detail::im2col(dy.slice(ni), oc, dy.h, dy.w, g, dcols);
        Eigen::Map<const MatXRM<T>> X(x.slice(ni), x.c, static_cast<Eigen::Index>(x.h) * x.w);
        Eigen::Map<MatXRM<T>> dX(dx.slice(ni), x.c, static_cast<Eigen::Index>(x.h) * x.w);
        dX.noalias() = W * dcols;
        dW.noalias() += X * dcols.transpose();
        const T* dyp = dy.slice(ni);
        for (int ci = 0; ci < oc; ++ci) {
            const T* chan = dyp + static_cast<std::size_t>(ci) * dy.h * dy.w;
            T s = T(0);
            for (int k = 0; k < dy.h * dy.w; ++k) s += chan[k];
            dbias[static_cast<std::size_t>(ci)] += s;
        }
    }
}

// ---------------------------------------------------------------------------
// Batch normalization over (N, H, W) per channel.

template <typename T>
struct BatchNormParams {
    std::vector<T> gamma, beta;
    std::vector<T> running_mean, running_var;

    explicit BatchNormParams(int channels = 0)
        : gamma(static_cast<std::size_t>(channels), T(1)),
          beta(static_cast<std::size_t>(channels), T(0)),
          running_mean(static_cast<std::size_t>(channels), T(0)),
          running_var(static_cast<std::size_t>(channels), T(1)) {}
};

template <typename T>
struct BatchNormCache {
    Tensor4<T> xhat;
    std::vector<T> mean, invstd;
};

template <typename T>
Tensor4<T> batchnorm_forward(const Tensor4<T>& x, BatchNormParams<T>& p, bool train,
                             BatchNormCache<T>* cache = nullptr, double momentum = 0.9,
                             double eps = 1e-5) {
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    const std::size_t m = static_cast<std::size_t>(x.n) * x.h * x.w;
    if (cache) {
        cache->xhat = Tensor4<T>(x.n, x.c, x.h, x.w);
        cache->mean.assign(static_cast<std::size_t>(x.c), T(0));
        cache->invstd.assign(static_cast<std::size_t>(x.c), T(0));
    }
    for (int ci = 0; ci < x.c; ++ci) {
        double mean, var;
        if (train) {
            double s = 0.0, s2 = 0.0;
            for (int ni = 0; ni < x.n; ++ni) {
                const T* chan = x.slice(ni) + static_cast<std::size_t>(ci) * x.h * x.w;
                for (int k = 0; k < x.h * x.w; ++k) {
                    s += chan[k];
                    s2 += double(chan[k]) * chan[k];
                }
            }
            mean = s / double(m);
            var = s2 / double(m) - mean * mean;
            if (var < 0.0) var = 0.0;
            const std::size_t c = static_cast<std::size_t>(ci);
            p.running_mean[c] = static_cast<T>(momentum * p.running_mean[c] + (1.0 - momentum) * mean);
            p.running_var[c] = static_cast<T>(momentum * p.running_var[c] + (1.0 - momentum) * var);
        } else {
            mean = p.running_mean[static_cast<std::size_t>(ci)];
            var = p.running_var[static_cast<std::size_t>(ci)];
        }
        const double invstd = 1.0 / std::sqrt(var + eps);
        const T g = p.gamma[static_cast<std::size_t>(ci)], b = p.beta[static_cast<std::size_t>(ci)];
        if (cache) {
            cache->mean[static_cast<std::size_t>(ci)] = static_cast<T>(mean);
            cache->invstd[static_cast<std::size_t>(ci)] = static_cast<T>(invstd);
        }
        for (int ni = 0; ni < x.n; ++ni) {
            const T* xi = x.slice(ni) + static_cast<std::size_t>(ci) * x.h * x.w;
            T* yi = y.slice(ni) + static_cast<std::size_t>(ci) * x.h * x.w;
            T* xh = cache ? cache->xhat.slice(ni) + static_cast<std::size_t>(ci) * x.h * x.w : nullptr;
            for (int k = 0; k < x.h * x.w; ++k) {
                const T xhat = static_cast<T>((xi[k] - mean) * invstd);
                if (xh) xh[k] = xhat;
                yi[k] = g * xhat + b;
            }
        }
    }
    return y;
}

// Exact gradient through the batch statistics (train mode).
template <typename T>
void batchnorm_backward(const Tensor4<T>& dy, const BatchNormParams<T>& p,
                        const BatchNormCache<T>& cache, Tensor4<T>& dx, std::vector<T>& dgamma,
                        std::vector<T>& dbeta) {
    dx = Tensor4<T>(dy.n, dy.c, dy.h, dy.w);
    dgamma.assign(static_cast<std::size_t>(dy.c), T(0));
    dbeta.assign(static_cast<std::size_t>(dy.c), T(0));
    const double m = double(dy.n) * dy.h * dy.w;
    for (int ci = 0; ci < dy.c; ++ci) {
        const std::size_t c = static_cast<std::size_t>(ci);
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int ni = 0; ni < dy.n; ++ni) {
            const T* dyi = dy.slice(ni) + c * dy.h * dy.w;
            const T* xh = cache.xhat.slice(ni) + c * dy.h * dy.w;
            for (int k = 0; k < dy.h * dy.w; ++k) {
                sum_dy += dyi[k];
                sum_dy_xhat += double(dyi[k]) * xh[k];
            }
        }
        dbeta[c] = static_cast<T>(sum_dy);
        dgamma[c] = static_cast<T>(sum_dy_xhat);
        const double g = p.gamma[c];
        const double invstd = cache.invstd[c];
        for (int ni = 0; ni < dy.n; ++ni) {
            const T* dyi = dy.slice(ni) + c * dy.h * dy.w;
            const T* xh = cache.xhat.slice(ni) + c * dy.h * dy.w;
            T* dxi = dx.slice(ni) + c * dy.h * dy.w;
            for (int k = 0; k < dy.h * dy.w; ++k) {
                const double t = m * double(dyi[k]) - sum_dy - double(xh[k]) * sum_dy_xhat;
                dxi[k] = static_cast<T>(g * invstd * t / m);
            }
        }
    }
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x) {
    Tensor4<T> y = x;
    for (T& v : y.v)
        if (v < T(0)) v = T(0);
    return y;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& dy, const Tensor4<T>& x) {
    Tensor4<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
        if (x.v[i] <= T(0)) dx.v[i] = T(0);
    return dx;
}

template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::runtime_error("concat shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    Tensor4<T> y(a.n, a.c + b.c, a.h, a.w);
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    for (int ni = 0; ni < a.n; ++ni) {
        std::copy(a.slice(ni), a.slice(ni) + a.c * plane, y.slice(ni));
        std::copy(b.slice(ni), b.slice(ni) + b.c * plane, y.slice(ni) + a.c * plane);
    }
    return y;
}

template <typename T>
void split_channels(const Tensor4<T>& dy, int ca, Tensor4<T>& da, Tensor4<T>& db) {
    da = Tensor4<T>(dy.n, ca, dy.h, dy.w);
    db = Tensor4<T>(dy.n, dy.c - ca, dy.h, dy.w);
    const std::size_t plane = static_cast<std::size_t>(dy.h) * dy.w;
    for (int ni = 0; ni < dy.n; ++ni) {
        std::copy(dy.slice(ni), dy.slice(ni) + ca * plane, da.slice(ni));
        std::copy(dy.slice(ni) + ca * plane, dy.slice(ni) + dy.c * plane, db.slice(ni));
    }
}

}  // namespace veldt
