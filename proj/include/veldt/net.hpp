#pragma once

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "veldt/net_layers.hpp"
#include "veldt/net_loss.hpp"
#include "veldt/range_image.hpp"
#include "veldt/tensor.hpp"

namespace veldt {

// Contracting/expanding fully convolutional classifier.
//
// Three conv blocks (each conv -> BN -> ReLU) shrink the input; the first
// downsamples twice as much horizontally as vertically to even out the flat
// aspect of the sweep image. Three transposed-conv blocks mirror them; after
// each deconvolution the matching contracting feature map (the raw input for
// the last block) is concatenated before BN and ReLU. A 1x1 classifier head
// taps each expanding block, giving logits at three resolutions.
struct NetShape {
    int in_ch = 2;
    int c1 = 24, c2 = 48, c3 = 96;
    ConvGeom g1{5, 11, 1, 2, 2, 5};
    ConvGeom g2{7, 15, 2, 2, 3, 7};
    ConvGeom g3{3, 3, 2, 2, 1, 1};
    int rows = 64, cols = 448;  // expected full-scale input; other sizes work too
};

template <typename T>
struct NetParams {
    NetShape shape;

    std::vector<T> conv1_k, conv1_b, conv2_k, conv2_b, conv3_k, conv3_b;
    BatchNormParams<T> bn1, bn2, bn3;
    std::vector<T> dec3_k, dec3_b, dec2_k, dec2_b, dec1_k, dec1_b;
    BatchNormParams<T> bn4, bn5, bn6;
    std::vector<T> head1_k, head1_b, head2_k, head2_b, head3_k, head3_b;

    explicit NetParams(const NetShape& s = {}) : shape(s) {
        const auto& [in_ch, c1, c2, c3, g1, g2, g3, rows, cols] = s;
        conv1_k.assign(std::size_t(c1) * in_ch * g1.kh * g1.kw, T(0));
        conv1_b.assign(std::size_t(c1), T(0));
        conv2_k.assign(std::size_t(c2) * c1 * g2.kh * g2.kw, T(0));
        conv2_b.assign(std::size_t(c2), T(0));
        conv3_k.assign(std::size_t(c3) * c2 * g3.kh * g3.kw, T(0));
        conv3_b.assign(std::size_t(c3), T(0));
        bn1 = BatchNormParams<T>(c1);
        bn2 = BatchNormParams<T>(c2);
        bn3 = BatchNormParams<T>(c3);
        dec3_k.assign(std::size_t(c3) * c2 * g3.kh * g3.kw, T(0));
        dec3_b.assign(std::size_t(c2), T(0));
        dec2_k.assign(std::size_t(2 * c2) * c1 * g2.kh * g2.kw, T(0));
        dec2_b.assign(std::size_t(c1), T(0));
        dec1_k.assign(std::size_t(2 * c1) * c1 * g1.kh * g1.kw, T(0));
        dec1_b.assign(std::size_t(c1), T(0));
        bn4 = BatchNormParams<T>(2 * c2);
        bn5 = BatchNormParams<T>(2 * c1);
        bn6 = BatchNormParams<T>(c1 + in_ch);
        head1_k.assign(std::size_t(2) * 2 * c2, T(0));
        head1_b.assign(2, T(0));
        head2_k.assign(std::size_t(2) * 2 * c1, T(0));
        head2_b.assign(2, T(0));
        head3_k.assign(std::size_t(2) * (c1 + in_ch), T(0));
        head3_b.assign(2, T(0));
    }

    struct Entry {
        const char* name;
        std::vector<T>* data;
    };

    // Learnable parameters in canonical order.
    std::vector<Entry> learnable() {
        return {
            {"conv1.k", &conv1_k},   {"conv1.b", &conv1_b},   {"bn1.gamma", &bn1.gamma},
            {"bn1.beta", &bn1.beta}, {"conv2.k", &conv2_k},   {"conv2.b", &conv2_b},
            {"bn2.gamma", &bn2.gamma}, {"bn2.beta", &bn2.beta}, {"conv3.k", &conv3_k},
            {"conv3.b", &conv3_b},   {"bn3.gamma", &bn3.gamma}, {"bn3.beta", &bn3.beta},
            {"dec3.k", &dec3_k},     {"dec3.b", &dec3_b},     {"bn4.gamma", &bn4.gamma},
            {"bn4.beta", &bn4.beta}, {"head1.k", &head1_k},   {"head1.b", &head1_b},
            {"dec2.k", &dec2_k},     {"dec2.b", &dec2_b},     {"bn5.gamma", &bn5.gamma},
            {"bn5.beta", &bn5.beta}, {"head2.k", &head2_k},   {"head2.b", &head2_b},
            {"dec1.k", &dec1_k},     {"dec1.b", &dec1_b},     {"bn6.gamma", &bn6.gamma},
            {"bn6.beta", &bn6.beta}, {"head3.k", &head3_k},   {"head3.b", &head3_b},
        };
    }

    // Batch-norm running statistics (not optimized, serialized with the model).
    std::vector<Entry> buffers() {
        return {
            {"bn1.rm", &bn1.running_mean}, {"bn1.rv", &bn1.running_var},
            {"bn2.rm", &bn2.running_mean}, {"bn2.rv", &bn2.running_var},
            {"bn3.rm", &bn3.running_mean}, {"bn3.rv", &bn3.running_var},
            {"bn4.rm", &bn4.running_mean}, {"bn4.rv", &bn4.running_var},
            {"bn5.rm", &bn5.running_mean}, {"bn5.rv", &bn5.running_var},
            {"bn6.rm", &bn6.running_mean}, {"bn6.rv", &bn6.running_var},
        };
    }

    void init_he(uint64_t seed) {
        std::mt19937_64 rng(seed);
        const auto& s = shape;
        he_init(conv1_k, s.in_ch * s.g1.kh * s.g1.kw, rng);
        he_init(conv2_k, s.c1 * s.g2.kh * s.g2.kw, rng);
        he_init(conv3_k, s.c2 * s.g3.kh * s.g3.kw, rng);
        he_init(dec3_k, s.c3 * s.g3.kh * s.g3.kw, rng);
        he_init(dec2_k, 2 * s.c2 * s.g2.kh * s.g2.kw, rng);
        he_init(dec1_k, 2 * s.c1 * s.g1.kh * s.g1.kw, rng);
        he_init(head1_k, 2 * s.c2, rng);
        he_init(head2_k, 2 * s.c1, rng);
        he_init(head3_k, s.c1 + s.in_ch, rng);
    }
};

template <typename T>
struct NetForward {
    Tensor4<T> logits_r1, logits_r2, logits_r3;

    // intermediates needed by the backward pass
    Tensor4<T> x0, b1, b2, b3, f3, f2, f1;
    ConvCache<T> cc1, cc2, cc3, hc1, hc2, hc3;
    DeconvCache<T> dc3, dc2, dc1;
    BatchNormCache<T> bc1, bc2, bc3, bc4, bc5, bc6;
    bool trained_mode = false;
};

inline ConvGeom head_geom() { return ConvGeom{1, 1, 1, 1, 0, 0}; }

template <typename T>
NetForward<T> net_forward(NetParams<T>& p, const Tensor4<T>& x, bool train,
                          bool keep_caches = true, bool check_finite = false) {
    const NetShape& s = p.shape;
    if (x.c != s.in_ch)
        throw std::runtime_error("input channel mismatch at block conv1: " + x.shape_str());
    if (check_finite) x.assert_finite("input");
    NetForward<T> f;
    f.trained_mode = train;
    auto* cc1 = keep_caches ? &f.cc1 : nullptr;
    auto* bc = keep_caches ? &f.bc1 : nullptr;

    if (keep_caches) f.x0 = x;
    Tensor4<T> a1 = conv_forward(x, p.conv1_k, p.conv1_b, s.c1, s.g1, cc1);
    Tensor4<T> b1 = batchnorm_forward(a1, p.bn1, train, bc);
    Tensor4<T> c1 = relu_forward(b1);
    if (keep_caches) f.b1 = std::move(b1);

    Tensor4<T> a2 = conv_forward(c1, p.conv2_k, p.conv2_b, s.c2, s.g2, keep_caches ? &f.cc2 : nullptr);
    Tensor4<T> b2 = batchnorm_forward(a2, p.bn2, train, keep_caches ? &f.bc2 : nullptr);
    Tensor4<T> c2 = relu_forward(b2);
    if (keep_caches) f.b2 = std::move(b2);

    Tensor4<T> a3 = conv_forward(c2, p.conv3_k, p.conv3_b, s.c3, s.g3, keep_caches ? &f.cc3 : nullptr);
    Tensor4<T> b3 = batchnorm_forward(a3, p.bn3, train, keep_caches ? &f.bc3 : nullptr);
    Tensor4<T> c3 = relu_forward(b3);
    if (keep_caches) f.b3 = std::move(b3);

    Tensor4<T> d3 = deconv_forward(c3, p.dec3_k, p.dec3_b, s.c2, s.g3, c2.h, c2.w,
                                   keep_caches ? &f.dc3 : nullptr);
    Tensor4<T> e3 = concat_channels(d3, c2);
    Tensor4<T> f3 = batchnorm_forward(e3, p.bn4, train, keep_caches ? &f.bc4 : nullptr);
    Tensor4<T> u3 = relu_forward(f3);
    if (keep_caches) f.f3 = std::move(f3);
    f.logits_r1 = conv_forward(u3, p.head1_k, p.head1_b, 2, head_geom(), keep_caches ? &f.hc1 : nullptr);

    Tensor4<T> d2 = deconv_forward(u3, p.dec2_k, p.dec2_b, s.c1, s.g2, c1.h, c1.w,
                                   keep_caches ? &f.dc2 : nullptr);
    Tensor4<T> e2 = concat_channels(d2, c1);
    Tensor4<T> f2 = batchnorm_forward(e2, p.bn5, train, keep_caches ? &f.bc5 : nullptr);
    Tensor4<T> u2 = relu_forward(f2);
    if (keep_caches) f.f2 = std::move(f2);
    f.logits_r2 = conv_forward(u2, p.head2_k, p.head2_b, 2, head_geom(), keep_caches ? &f.hc2 : nullptr);

    Tensor4<T> d1 = deconv_forward(u2, p.dec1_k, p.dec1_b, s.c1, s.g1, x.h, x.w,
                                   keep_caches ? &f.dc1 : nullptr);
    Tensor4<T> e1 = concat_channels(d1, x);
    Tensor4<T> f1 = batchnorm_forward(e1, p.bn6, train, keep_caches ? &f.bc6 : nullptr);
    Tensor4<T> u1 = relu_forward(f1);
    if (keep_caches) f.f1 = std::move(f1);
    f.logits_r3 = conv_forward(u1, p.head3_k, p.head3_b, 2, head_geom(), keep_caches ? &f.hc3 : nullptr);

    if (check_finite) {
        f.logits_r1.assert_finite("head1");
        f.logits_r2.assert_finite("head2");
        f.logits_r3.assert_finite("head3");
    }
    return f;
}

template <typename T>
void add_into(Tensor4<T>& a, const Tensor4<T>& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

// Exact gradients for every learnable parameter. The per-head loss gradients
// must already carry their resolution weights.
template <typename T>
NetParams<T> net_backward(NetParams<T>& p, const NetForward<T>& f, const Tensor4<T>& dl_r1,
                          const Tensor4<T>& dl_r2, const Tensor4<T>& dl_r3) {
    if (!f.trained_mode) throw std::runtime_error("backward requires a train-mode forward cache");
    const NetShape& s = p.shape;
    NetParams<T> g(s);

    Tensor4<T> du1, df1, de1, dd1, dx_skip;
    conv_backward(dl_r3, p.head3_k, 2, head_geom(), f.hc3, du1, g.head3_k, g.head3_b);
    df1 = relu_backward(du1, f.f1);
    batchnorm_backward(df1, p.bn6, f.bc6, de1, g.bn6.gamma, g.bn6.beta);
    split_channels(de1, s.c1, dd1, dx_skip);

    Tensor4<T> du2, du2h;
    deconv_backward(dd1, p.dec1_k, s.c1, s.g1, f.dc1, du2, g.dec1_k, g.dec1_b);
    conv_backward(dl_r2, p.head2_k, 2, head_geom(), f.hc2, du2h, g.head2_k, g.head2_b);
    add_into(du2, du2h);

    Tensor4<T> df2, de2, dd2, dc1_skip;
    df2 = relu_backward(du2, f.f2);
    batchnorm_backward(df2, p.bn5, f.bc5, de2, g.bn5.gamma, g.bn5.beta);
    split_channels(de2, s.c1, dd2, dc1_skip);

    Tensor4<T> du3, du3h;
    deconv_backward(dd2, p.dec2_k, s.c1, s.g2, f.dc2, du3, g.dec2_k, g.dec2_b);
    conv_backward(dl_r1, p.head1_k, 2, head_geom(), f.hc1, du3h, g.head1_k, g.head1_b);
    add_into(du3, du3h);

    Tensor4<T> df3, de3, dd3, dc2_skip;
    df3 = relu_backward(du3, f.f3);
    batchnorm_backward(df3, p.bn4, f.bc4, de3, g.bn4.gamma, g.bn4.beta);
    split_channels(de3, s.c2, dd3, dc2_skip);

    Tensor4<T> dc3t;
    deconv_backward(dd3, p.dec3_k, s.c2, s.g3, f.dc3, dc3t, g.dec3_k, g.dec3_b);

    Tensor4<T> db3 = relu_backward(dc3t, f.b3);
    Tensor4<T> da3;
    batchnorm_backward(db3, p.bn3, f.bc3, da3, g.bn3.gamma, g.bn3.beta);
    Tensor4<T> dc2;
    conv_backward(da3, p.conv3_k, s.c3, s.g3, f.cc3, dc2, g.conv3_k, g.conv3_b);
    add_into(dc2, dc2_skip);

    Tensor4<T> db2 = relu_backward(dc2, f.b2);
    Tensor4<T> da2;
    batchnorm_backward(db2, p.bn2, f.bc2, da2, g.bn2.gamma, g.bn2.beta);
    Tensor4<T> dc1;
    conv_backward(da2, p.conv2_k, s.c2, s.g2, f.cc2, dc1, g.conv2_k, g.conv2_b);
    add_into(dc1, dc1_skip);

    Tensor4<T> db1 = relu_backward(dc1, f.b1);
    Tensor4<T> da1;
    batchnorm_backward(db1, p.bn1, f.bc1, da1, g.bn1.gamma, g.bn1.beta);
    Tensor4<T> dx0;
    conv_backward(da1, p.conv1_k, s.c1, s.g1, f.cc1, dx0, g.conv1_k, g.conv1_b);

    return g;
}

// ---------------------------------------------------------------------------
// Adam with bias correction.

template <typename T>
struct AdamState {
    int64_t t = 0;
    std::vector<std::vector<T>> m, v;

    void ensure(NetParams<T>& p) {
        if (!m.empty()) return;
        for (auto& e : p.learnable()) {
            m.emplace_back(e.data->size(), T(0));
            v.emplace_back(e.data->size(), T(0));
        }
    }
};

template <typename T>
void adam_step(NetParams<T>& p, NetParams<T>& grads, AdamState<T>& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    state.ensure(p);
    ++state.t;
    const double bc1 = 1.0 - std::pow(beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(beta2, double(state.t));
    auto ps = p.learnable();
    auto gs = grads.learnable();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        std::vector<T>& w = *ps[i].data;
        const std::vector<T>& g = *gs[i].data;
        std::vector<T>& m = state.m[i];
        std::vector<T>& v = state.v[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = g[k];
            const double mk = beta1 * double(m[k]) + (1.0 - beta1) * gk;
            const double vk = beta2 * double(v[k]) + (1.0 - beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            w[k] = static_cast<T>(double(w[k]) - lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps));
        }
    }
}

// ---------------------------------------------------------------------------
// Horizontal flip augmentation: both input channels and the class grid mirror
// together, preserving sweep geometry.

template <typename T>
void hflip_sample(Tensor4<T>& x, ClassGrid& gt) {
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci)
            for (int y = 0; y < x.h; ++y)
                for (int l = 0, r = x.w - 1; l < r; ++l, --r)
                    std::swap(x.at(ni, ci, y, l), x.at(ni, ci, y, r));
    for (int ni = 0; ni < gt.n; ++ni)
        for (int y = 0; y < gt.h; ++y)
            for (int l = 0, r = gt.w - 1; l < r; ++l, --r)
                std::swap(gt.at(ni, y, l), gt.at(ni, y, r));
}

// ---------------------------------------------------------------------------
// Inference over a projected sweep. The image is right-cropped to the
// network width and the scores padded back with zeros.

template <typename T>
Tensor4<T> make_net_input(const RangeImage& img, int net_cols) {
    Tensor4<T> x(1, 2, img.height, net_cols);
    for (int y = 0; y < img.height; ++y)
        for (int c = 0; c < net_cols; ++c) {
            x.at(0, 0, y, c) = static_cast<T>(img.range[img.idx(y, c)]);
            x.at(0, 1, y, c) = static_cast<T>(img.reflectivity[img.idx(y, c)]);
        }
    return x;
}

inline ClassGrid make_gt_grid(const GroundTruthImage& gt, int net_cols) {
    ClassGrid g(1, gt.height, net_cols);
    for (int y = 0; y < gt.height; ++y)
        for (int c = 0; c < net_cols; ++c) g.at(0, y, c) = gt.cls[gt.idx(y, c)];
    return g;
}

// Per-pixel vehicle probability at the full image width (padded columns score 0).
template <typename T>
std::vector<float> net_predict(NetParams<T>& p, const RangeImage& img) {
    const int net_cols = std::min(p.shape.cols, img.width);
    Tensor4<T> x = make_net_input<T>(img, net_cols);
    NetForward<T> f = net_forward(p, x, /*train=*/false, /*keep_caches=*/false);
    std::vector<float> probs(static_cast<std::size_t>(img.height) * img.width, 0.f);
    for (int y = 0; y < img.height; ++y)
        for (int c = 0; c < net_cols; ++c) {
            const double s0 = f.logits_r3.at(0, 0, y, c);
            const double s1 = f.logits_r3.at(0, 1, y, c);
            probs[img.idx(y, c)] = static_cast<float>(1.0 / (1.0 + std::exp(s0 - s1)));
        }
    return probs;
}

// ---------------------------------------------------------------------------
// Checkpoint: versioned binary, little-endian float32 payloads, shapes
// embedded via the architecture block and per-entry element counts.

namespace detail {

inline void write_u32(std::ostream& o, uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_u64(std::ostream& o, uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }
inline void write_i32(std::ostream& o, int32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
inline uint32_t read_u32(std::istream& i) {
    uint32_t v;
    i.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline uint64_t read_u64(std::istream& i) {
    uint64_t v;
    i.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
inline int32_t read_i32(std::istream& i) {
    int32_t v;
    i.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

template <typename T>
void write_entry(std::ostream& o, const std::string& name, const std::vector<T>& data) {
    write_u32(o, static_cast<uint32_t>(name.size()));
    o.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(o, data.size());
    for (T x : data) {
        const float f = static_cast<float>(x);
        o.write(reinterpret_cast<const char*>(&f), 4);
    }
}

template <typename T>
void read_entry(std::istream& in, const std::string& expect, std::vector<T>& data) {
    const uint32_t len = read_u32(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (name != expect) throw std::runtime_error("checkpoint entry order mismatch: got " + name);
    const uint64_t numel = read_u64(in);
    if (numel != data.size())
        throw std::runtime_error("checkpoint entry size mismatch for " + name);
    for (uint64_t k = 0; k < numel; ++k) {
        float f;
        in.read(reinterpret_cast<char*>(&f), 4);
        data[static_cast<std::size_t>(k)] = static_cast<T>(f);
    }
}

}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'V', 'E', 'L', 'D', 'T', 'N', 'E', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const std::string& path, NetParams<T>& p, const AdamState<T>* opt = nullptr,
                     int64_t iteration = 0) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    detail::write_u32(out, kCheckpointVersion);
    const NetShape& s = p.shape;
    const int32_t arch[] = {s.in_ch, s.c1,     s.c2,     s.c3,     s.g1.kh,  s.g1.kw,  s.g1.sh,
                            s.g1.sw, s.g1.ph,  s.g1.pw,  s.g2.kh,  s.g2.kw,  s.g2.sh,  s.g2.sw,
                            s.g2.ph, s.g2.pw,  s.g3.kh,  s.g3.kw,  s.g3.sh,  s.g3.sw,  s.g3.ph,
                            s.g3.pw, s.rows,   s.cols};
    for (int32_t a : arch) detail::write_i32(out, a);
    detail::write_u32(out, opt ? 1u : 0u);
    for (auto& e : p.learnable()) detail::write_entry(out, e.name, *e.data);
    for (auto& e : p.buffers()) detail::write_entry(out, e.name, *e.data);
    if (opt) {
        detail::write_u64(out, static_cast<uint64_t>(opt->t));
        detail::write_u64(out, static_cast<uint64_t>(iteration));
        auto ls = p.learnable();
        for (std::size_t i = 0; i < ls.size(); ++i) {
            detail::write_entry(out, std::string(ls[i].name) + ".m", opt->m[i]);
            detail::write_entry(out, std::string(ls[i].name) + ".v", opt->v[i]);
        }
    }
}

template <typename T>
NetParams<T> load_checkpoint(const std::string& path, AdamState<T>* opt = nullptr,
                             int64_t* iteration = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw std::runtime_error("not a model checkpoint: " + path);
    const uint32_t version = detail::read_u32(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    NetShape s;
    int32_t arch[24];
    for (int32_t& a : arch) a = detail::read_i32(in);
    s.in_ch = arch[0];
    s.c1 = arch[1];
    s.c2 = arch[2];
    s.c3 = arch[3];
    s.g1 = {arch[4], arch[5], arch[6], arch[7], arch[8], arch[9]};
    s.g2 = {arch[10], arch[11], arch[12], arch[13], arch[14], arch[15]};
    s.g3 = {arch[16], arch[17], arch[18], arch[19], arch[20], arch[21]};
    s.rows = arch[22];
    s.cols = arch[23];
    const uint32_t flags = detail::read_u32(in);
    NetParams<T> p(s);
    for (auto& e : p.learnable()) detail::read_entry(in, e.name, *e.data);
    for (auto& e : p.buffers()) detail::read_entry(in, e.name, *e.data);
    if ((flags & 1u) && opt) {
        opt->ensure(p);
        opt->t = static_cast<int64_t>(detail::read_u64(in));
        const int64_t iter = static_cast<int64_t>(detail::read_u64(in));
        if (iteration) *iteration = iter;
        auto ls = p.learnable();
        for (std::size_t i = 0; i < ls.size(); ++i) {
            detail::read_entry(in, std::string(ls[i].name) + ".m", opt->m[i]);
            detail::read_entry(in, std::string(ls[i].name) + ".v", opt->v[i]);
        }
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return p;
}

}  // namespace veldt
