#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "veldt/net_train.hpp"
#include "veldt/synth.hpp"

using namespace veldt;

namespace {

NetShape toy_shape() {
    NetShape s;
    s.c1 = 4;
    s.c2 = 6;
    s.c3 = 8;
    s.rows = 16;
    s.cols = 32;
    return s;
}

std::vector<TrainSample> toy_dataset(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_int_distribution<int> uc(0, 2);
    std::vector<TrainSample> out;
    for (int i = 0; i < n; ++i) {
        TrainSample s;
        s.input = Tensor4<float>(1, 2, 16, 32);
        for (auto& v : s.input.v) v = static_cast<float>(nd(rng));
        s.gt = ClassGrid(1, 16, 32);
        for (auto& c : s.gt.v) c = static_cast<uint8_t>(uc(rng));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("training reduces the loss on a small fixed set") {
    NetParams<float> p(toy_shape());
    p.init_he(21);
    const auto data = toy_dataset(3, 5);
    TrainConfig cfg;
    cfg.iterations = 120;
    cfg.batch = 2;
    cfg.seed = 3;
    AdamState<float> opt;
    const auto log = train_net(p, data, cfg, opt);
    REQUIRE(log.size() == 120);
    double first = 0, last = 0;
    for (int i = 0; i < 10; ++i) {
        first += log[static_cast<std::size_t>(i)].total;
        last += log[log.size() - 1 - static_cast<std::size_t>(i)].total;
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto data = toy_dataset(3, 9);
    TrainConfig cfg;
    cfg.iterations = 30;
    cfg.batch = 2;
    cfg.seed = 11;

    NetParams<float> p1(toy_shape()), p2(toy_shape());
    p1.init_he(8);
    p2.init_he(8);
    AdamState<float> o1, o2;
    const auto l1 = train_net(p1, data, cfg, o1);
    const auto l2 = train_net(p2, data, cfg, o2);
    for (std::size_t i = 0; i < l1.size(); ++i) CHECK(l1[i].total == l2[i].total);
    auto e1 = p1.learnable();
    auto e2 = p2.learnable();
    for (std::size_t i = 0; i < e1.size(); ++i) CHECK(*e1[i].data == *e2[i].data);
}

TEST_CASE("zero-iteration budget leaves the initialization untouched") {
    NetParams<float> p(toy_shape());
    p.init_he(33);
    NetParams<float> before = p;
    const auto data = toy_dataset(2, 1);
    TrainConfig cfg;
    cfg.iterations = 0;
    AdamState<float> opt;
    const auto log = train_net(p, data, cfg, opt);
    CHECK(log.empty());
    auto a = before.learnable();
    auto b = p.learnable();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].data == *b[i].data);
}

TEST_CASE("resumed training continues the loss curve") {
    const auto data = toy_dataset(3, 14);
    TrainConfig straight;
    straight.iterations = 60;
    straight.batch = 2;
    straight.seed = 4;

    NetParams<float> p_straight(toy_shape());
    p_straight.init_he(19);
    AdamState<float> o_straight;
    const auto log_straight = train_net(p_straight, data, straight, o_straight, 0, 60);

    // same run split in two, round-tripped through the checkpoint format
    NetParams<float> p_a(toy_shape());
    p_a.init_he(19);
    AdamState<float> o_a;
    TrainConfig first_half = straight;
    first_half.iterations = 30;
    const auto log_a = train_net(p_a, data, first_half, o_a, 0, 60);

    const std::string path = "/tmp/veldt_resume_test.bin";
    save_checkpoint(path, p_a, &o_a, 30);
    AdamState<float> o_b;
    int64_t start = 0;
    NetParams<float> p_b = load_checkpoint<float>(path, &o_b, &start);
    REQUIRE(start == 30);
    TrainConfig second_half = straight;
    second_half.iterations = 30;
    const auto log_b = train_net(p_b, data, second_half, o_b, start, 60);

    REQUIRE(log_b.size() == 30);
    for (std::size_t i = 0; i < log_b.size(); ++i) {
        const double ref = log_straight[30 + i].total;
        CHECK(log_b[i].total == Catch::Approx(ref).epsilon(0.02).margin(1e-3));
    }
}

TEST_CASE("flip consistency on a single conv block") {
    // loss(flip(x), flip(y)) under mirrored kernels equals loss(x, y)
    std::mt19937_64 rng(55);
    const ConvGeom g{3, 5, 1, 1, 1, 2};
    const int ic = 2, oc = 2, h = 6, w = 12;
    Tensor4<double> x(1, ic, h, w);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (auto& v : x.v) v = nd(rng);
    ClassGrid gt(1, h, w);
    std::uniform_int_distribution<int> uc(0, 2);
    for (auto& c : gt.v) c = static_cast<uint8_t>(uc(rng));

    std::vector<double> kernel(static_cast<std::size_t>(oc) * ic * g.kh * g.kw);
    he_init(kernel, ic * g.kh * g.kw, rng);
    const std::vector<double> bias(oc, 0.05);

    LossConfig cfg;
    const Tensor4<double> logits = conv_forward(x, kernel, bias, oc, g);
    const double base = wce_loss(logits, gt, cfg).first;

    Tensor4<double> xf = x;
    ClassGrid gf = gt;
    // reuse the augmentation helper on a double tensor
    for (int c = 0; c < ic; ++c)
        for (int y = 0; y < h; ++y)
            for (int l = 0, r = w - 1; l < r; ++l, --r) std::swap(xf.at(0, c, y, l), xf.at(0, c, y, r));
    for (int y = 0; y < h; ++y)
        for (int l = 0, r = w - 1; l < r; ++l, --r) std::swap(gf.at(0, y, l), gf.at(0, y, r));

    std::vector<double> kf = kernel;
    for (int o = 0; o < oc; ++o)
        for (int i = 0; i < ic; ++i)
            for (int ky = 0; ky < g.kh; ++ky)
                for (int kx = 0; kx < g.kw; ++kx)
                    kf[((static_cast<std::size_t>(o) * ic + i) * g.kh + ky) * g.kw + kx] =
                        kernel[((static_cast<std::size_t>(o) * ic + i) * g.kh + ky) * g.kw +
                               (g.kw - 1 - kx)];
    const Tensor4<double> logits_f = conv_forward(xf, kf, bias, oc, g);
    const double flipped = wce_loss(logits_f, gf, cfg).first;
    CHECK(flipped == Catch::Approx(base).epsilon(1e-10));
}

TEST_CASE("predict pads the cropped columns with zero scores") {
    NetShape s = toy_shape();
    NetParams<float> p(s);
    p.init_he(61);

    // image wider than the network: right columns padded back as zeros
    RangeImage img;
    img.height = 16;
    img.width = 35;
    img.range.assign(static_cast<std::size_t>(16) * 35, 5.f);
    img.reflectivity.assign(static_cast<std::size_t>(16) * 35, 0.5f);
    img.point_index.assign(static_cast<std::size_t>(16) * 35, 0);

    const auto probs = net_predict(p, img);
    REQUIRE(probs.size() == static_cast<std::size_t>(16) * 35);
    for (int y = 0; y < 16; ++y) {
        for (int c = 32; c < 35; ++c) CHECK(probs[img.idx(y, c)] == 0.f);
        for (int c = 0; c < 32; ++c) {
            CHECK(probs[img.idx(y, c)] >= 0.f);
            CHECK(probs[img.idx(y, c)] <= 1.f);
        }
    }
}

TEST_CASE("training log file format") {
    std::vector<TrainLogRow> rows = {{0, 1.0, 2.0, 3.0, 3.9}, {1, 0.9, 1.8, 2.7, 3.5}};
    const std::string path = "/tmp/veldt_trainlog_test.csv";
    append_train_log(path, rows, true);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,loss_r1,loss_r2,loss_r3,total");
    std::getline(in, line);
    CHECK(line.rfind("0,1.000000,2.000000,3.000000,3.900000", 0) == 0);
}
