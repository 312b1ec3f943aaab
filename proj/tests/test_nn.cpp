#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ridgerec/adam.hpp"
#include "ridgerec/checkpoint.hpp"
#include "ridgerec/train.hpp"
#include "testutil.hpp"

using namespace ridgerec;
using testutil::random_tensor;

namespace {

Layer random_conv(Rng& rng, LayerKind kind, int in_c, int out_c, int k, int stride) {
    Layer l;
    l.kind = kind;
    l.in_c = in_c;
    l.out_c = out_c;
    l.k = k;
    l.stride = stride;
    l.weight.resize(static_cast<size_t>(out_c) * in_c * k * k);
    l.bias.resize(out_c);
    for (auto& w : l.weight) w = static_cast<float>(rng.uniform(-0.5, 0.5));
    for (auto& b : l.bias) b = static_cast<float>(rng.uniform(-0.2, 0.2));
    return l;
}

// Central differences on a float parameter array against analytic grads.
// The effective step is measured after float rounding.
double param_fd_error(std::vector<float>& params, const std::vector<double>& analytic,
                      const std::function<double()>& loss, double h = 1e-3,
                      int max_probes = 0) {
    double worst = 0.0, scale = 1e-12;
    const size_t stride = max_probes > 0 && params.size() > static_cast<size_t>(max_probes)
                              ? params.size() / max_probes
                              : 1;
    for (size_t i = 0; i < params.size(); i += stride) {
        const float orig = params[i];
        const float plus = static_cast<float>(orig + h);
        const float minus = static_cast<float>(orig - h);
        params[i] = plus;
        const double fp = loss();
        params[i] = minus;
        const double fm = loss();
        params[i] = orig;
        const double fd = (fp - fm) / (static_cast<double>(plus) - static_cast<double>(minus));
        worst = std::max(worst, std::abs(fd - analytic[i]));
        scale = std::max(scale, std::abs(fd));
    }
    return worst / scale;
}

double tensor_fd_error(Tensor4& x, const Tensor4& analytic, const std::function<double()>& loss,
                       double h = 1e-5) {
    double worst = 0.0, scale = 1e-12;
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = x.data[i];
        x.data[i] = orig + h;
        const double fp = loss();
        x.data[i] = orig - h;
        const double fm = loss();
        x.data[i] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - analytic.data[i]));
        scale = std::max(scale, std::abs(fd));
    }
    return worst / scale;
}

// Loss used for layer checks: weighted sum so the output gradient is nontrivial.
double weighted_sum(const Tensor4& y, const Tensor4& weights) {
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += y.data[i] * weights.data[i];
    return s;
}

GrayImage binary_stripes(int w, int h, double period) {
    GrayImage img = testutil::stripes(w, h, period, 0.3);
    for (auto& v : img.data) v = v > 0.5 ? 1.0 : 0.0;
    return img;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("conv stride 2 with a centered sampling kernel subsamples even coordinates") {
    Layer l;
    l.kind = LayerKind::Conv;
    l.in_c = 1;
    l.out_c = 1;
    l.k = 3;
    l.stride = 2;
    l.weight.assign(9, 0.0f);
    l.weight[4] = 1.0f;  // center tap
    l.bias.assign(1, 0.0f);

    Rng rng(61);
    const Tensor4 x = random_tensor(rng, 1, 1, 4, 4);
    const Tensor4 y = conv2d_forward(x, l, 1);
    REQUIRE(y.h == 2);
    REQUIRE(y.w == 2);
    for (int oy = 0; oy < 2; ++oy)
        for (int ox = 0; ox < 2; ++ox)
            CHECK(y.at(0, 0, oy, ox) == x.at(0, 0, 2 * oy, 2 * ox));
}

TEST_CASE("conv forward equals the direct seven-loop oracle") {
    Rng rng(63);
    const Layer l = random_conv(rng, LayerKind::Conv, 3, 2, 4, 2);
    const Tensor4 x = random_tensor(rng, 2, 3, 7, 6);
    const Tensor4 y = conv2d_forward(x, l, 2);
    const ConvGeom g = conv_geometry(3, 2, 4, 2, 7, 6);
    REQUIRE(y.h == 4);
    REQUIRE(y.w == 3);
    for (int n = 0; n < 2; ++n) {
        for (int oc = 0; oc < 2; ++oc) {
            for (int oy = 0; oy < g.out_h; ++oy) {
                for (int ox = 0; ox < g.out_w; ++ox) {
                    double acc = l.bias[oc];
                    for (int ic = 0; ic < 3; ++ic)
                        for (int ky = 0; ky < 4; ++ky)
                            for (int kx = 0; kx < 4; ++kx) {
                                const int iy = oy * 2 - g.pad_top + ky;
                                const int ix = ox * 2 - g.pad_left + kx;
                                if (iy < 0 || iy >= 7 || ix < 0 || ix >= 6) continue;
                                acc += static_cast<double>(
                                           l.weight[((oc * 3 + ic) * 4 + ky) * 4 + kx]) *
                                       x.at(n, ic, iy, ix);
                            }
                    CHECK(y.at(n, oc, oy, ox) == doctest::Approx(acc).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("conv backward matches finite differences") {
    Rng rng(65);
    Layer l = random_conv(rng, LayerKind::Conv, 2, 3, 3, 2);
    Tensor4 x = random_tensor(rng, 2, 2, 6, 5);
    const Tensor4 gw = random_tensor(rng, 2, 3, 3, 3);  // matches output shape

    auto loss = [&]() { return weighted_sum(conv2d_forward(x, l, 1), gw); };

    LayerGrads grads;
    const Tensor4 gx = conv2d_backward(x, l, gw, grads, 1);
    CHECK(tensor_fd_error(x, gx, loss) <= 1e-4);
    CHECK(param_fd_error(l.weight, grads.weight, loss) <= 1e-4);
    CHECK(param_fd_error(l.bias, grads.bias, loss) <= 1e-4);
    CHECK_THROWS_AS(conv2d_forward(random_tensor(rng, 1, 5, 6, 5), l, 1), std::invalid_argument);
}

TEST_CASE("conv_transpose is the exact adjoint of conv with tied weights") {
    Rng rng(67);
    for (int trial = 0; trial < 50; ++trial) {
        const int in_c = 1 + rng.uniform_int(3);
        const int out_c = 1 + rng.uniform_int(3);
        const int k = 3 + rng.uniform_int(2);
        const int h = 4 + rng.uniform_int(6), w = 4 + rng.uniform_int(6);

        Layer conv = random_conv(rng, LayerKind::Conv, in_c, out_c, k, 2);
        conv.bias.assign(out_c, 0.0f);

        // Transpose layer mapping out_c back up to in_c with tied weights.
        Layer tr;
        tr.kind = LayerKind::ConvTranspose;
        tr.in_c = out_c;
        tr.out_c = in_c;
        tr.k = k;
        tr.stride = 2;
        tr.target_h = h;
        tr.target_w = w;
        tr.bias.assign(in_c, 0.0f);
        tr.weight.resize(conv.weight.size());
        for (int oc = 0; oc < out_c; ++oc)
            for (int ic = 0; ic < in_c; ++ic)
                for (int t = 0; t < k * k; ++t)
                    tr.weight[(static_cast<size_t>(ic) * out_c + oc) * k * k + t] =
                        conv.weight[(static_cast<size_t>(oc) * in_c + ic) * k * k + t];

        const Tensor4 x = random_tensor(rng, 1, in_c, h, w);
        const Tensor4 cx = conv2d_forward(x, conv, 1);
        const Tensor4 y = random_tensor(rng, 1, out_c, cx.h, cx.w);
        const Tensor4 ty = conv_transpose2d_forward(y, tr, 1);
        REQUIRE(ty.h == h);
        REQUIRE(ty.w == w);

        const double lhs = testutil::dot(cx.data, y.data);
        const double rhs = testutil::dot(x.data, ty.data);
        double nx = std::sqrt(testutil::dot(x.data, x.data));
        double ny = std::sqrt(testutil::dot(y.data, y.data));
        CHECK(std::abs(lhs - rhs) <= 1e-8 * nx * ny);
    }
}

TEST_CASE("conv_transpose doubles spatial dims and passes finite differences") {
    Rng rng(69);
    Layer l = random_conv(rng, LayerKind::ConvTranspose, 2, 3, 4, 2);
    Tensor4 x = random_tensor(rng, 1, 2, 2, 2);
    const Tensor4 y = conv_transpose2d_forward(x, l, 1);
    CHECK(y.h == 4);
    CHECK(y.w == 4);
    CHECK(y.c == 3);

    const Tensor4 gw = random_tensor(rng, 1, 3, 4, 4);
    auto loss = [&]() { return weighted_sum(conv_transpose2d_forward(x, l, 1), gw); };
    LayerGrads grads;
    const Tensor4 gx = conv_transpose2d_backward(x, l, gw, grads, 1);
    CHECK(tensor_fd_error(x, gx, loss) <= 1e-4);
    CHECK(param_fd_error(l.weight, grads.weight, loss) <= 1e-4);
    CHECK(param_fd_error(l.bias, grads.bias, loss) <= 1e-4);
}

TEST_CASE("batchnorm normalizes, applies affine tail, and matches finite differences") {
    Rng rng(71);
    Layer bn;
    bn.kind = LayerKind::BatchNorm;
    bn.in_c = bn.out_c = 3;
    bn.scale.assign(3, 1.0f);
    bn.shift.assign(3, 0.0f);
    bn.running_mean.assign(3, 0.0f);
    bn.running_var.assign(3, 1.0f);

    Tensor4 x = random_tensor(rng, 2, 3, 4, 5, 2.0);
    const Tensor4 y = batchnorm_forward(x, bn, PassMode::Train, 1);
    const size_t plane = 4 * 5;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (int n = 0; n < 2; ++n)
            for (size_t i = 0; i < plane; ++i) mean += y.data[y.index(n, c, 0, 0) + i];
        mean /= (2 * plane);
        for (int n = 0; n < 2; ++n)
            for (size_t i = 0; i < plane; ++i) {
                const double d = y.data[y.index(n, c, 0, 0) + i] - mean;
                var += d * d;
            }
        var /= (2 * plane);
        CHECK(std::abs(mean) <= 1e-6);
        CHECK(std::abs(var - 1.0) <= 1e-3);  // eps-guarded normalization
    }

    // Affine tail is exact.
    Layer bn2 = bn;
    bn2.scale.assign(3, 2.0f);
    bn2.shift.assign(3, 3.0f);
    const Tensor4 y2 = batchnorm_forward(x, bn2, PassMode::Train, 1);
    for (size_t i = 0; i < y.size(); ++i)
        CHECK(y2.data[i] == doctest::Approx(2.0 * y.data[i] + 3.0).epsilon(1e-12));

    const Tensor4 gw = random_tensor(rng, 2, 3, 4, 5);
    auto loss = [&]() { return weighted_sum(batchnorm_forward(x, bn, PassMode::Train, 1), gw); };
    LayerGrads grads;
    const Tensor4 gx = batchnorm_backward(x, bn, gw, grads, 1);
    CHECK(tensor_fd_error(x, gx, loss) <= 1e-3);
    CHECK(param_fd_error(bn.scale, grads.scale, loss) <= 1e-3);
    CHECK(param_fd_error(bn.shift, grads.shift, loss) <= 1e-3);

    // Train mode needs at least two normalization samples.
    Layer bn1 = bn;
    bn1.in_c = bn1.out_c = 1;
    bn1.scale.assign(1, 1.0f);
    bn1.shift.assign(1, 0.0f);
    bn1.running_mean.assign(1, 0.0f);
    bn1.running_var.assign(1, 1.0f);
    const Tensor4 single(1, 1, 1, 1);
    CHECK_THROWS_AS(batchnorm_forward(single, bn1, PassMode::Train, 1), std::invalid_argument);
}

TEST_CASE("activations: values and finite differences") {
    Tensor4 x(1, 1, 1, 3);
    x.data = {-1.0, 0.0, 2.0};
    const Tensor4 r = activation_forward(x, LayerKind::Relu, 0.0);
    CHECK(r.data[0] == 0.0);
    CHECK(r.data[2] == 2.0);
    const Tensor4 lk = activation_forward(x, LayerKind::LeakyRelu, 0.2);
    CHECK(lk.data[0] == doctest::Approx(-0.2));
    const Tensor4 sg = activation_forward(x, LayerKind::Sigmoid, 0.0);
    CHECK(sg.data[1] == doctest::Approx(0.5));

    // Sigmoid gradient at 0 is exactly 1/4.
    Tensor4 ones(1, 1, 1, 3);
    ones.data = {1.0, 1.0, 1.0};
    const Tensor4 gs = activation_backward(x, LayerKind::Sigmoid, 0.0, ones);
    CHECK(gs.data[1] == doctest::Approx(0.25));

    Rng rng(73);
    for (LayerKind kind : {LayerKind::Relu, LayerKind::LeakyRelu, LayerKind::Sigmoid}) {
        Tensor4 t = random_tensor(rng, 1, 2, 3, 3, 2.0);
        // Keep probes away from the relu kink.
        for (auto& v : t.data)
            if (std::abs(v) < 0.05) v = 0.1;
        const Tensor4 gw = random_tensor(rng, 1, 2, 3, 3);
        auto loss = [&]() { return weighted_sum(activation_forward(t, kind, 0.2), gw); };
        const Tensor4 gx = activation_backward(t, kind, 0.2, gw);
        CHECK(tensor_fd_error(t, gx, loss) <= 1e-4);
    }
}

TEST_CASE("adam first-step closed forms") {
    AdamConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.0;

    // f(x) = x^2 at x = 1: gradient 2, first update ~ -lr.
    std::vector<float> p = {1.0f};
    std::vector<double> g = {2.0};
    std::vector<double> m(1, 0.0), v(1, 0.0);
    adam_update_array(p, g, m, v, 1, cfg);
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));

    // First step with any gradient: update = -lr * g / (|g| + eps).
    std::vector<float> p2 = {0.3f};
    std::vector<double> g2 = {-0.07};
    std::vector<double> m2(1, 0.0), v2(1, 0.0);
    adam_update_array(p2, g2, m2, v2, 1, cfg);
    CHECK(p2[0] == doctest::Approx(0.3 + cfg.lr * (0.07 / (0.07 + cfg.eps))).epsilon(1e-6));

    // Decay-only path: zero gradient, weight decay pulls toward zero by ~lr.
    AdamConfig wd = cfg;
    wd.weight_decay = 1e-4;
    std::vector<float> p3 = {1.0f};
    std::vector<double> g3 = {0.0};
    std::vector<double> m3(1, 0.0), v3(1, 0.0);
    adam_update_array(p3, g3, m3, v3, 1, wd);
    CHECK(p3[0] == doctest::Approx(1.0 - wd.lr).epsilon(1e-3));
}

TEST_CASE("build_cae shape contracts") {
    const CaeModel big = build_cae(260, 320, 5, 1024, 4);
    CHECK(big.bottleneck_h == 9);  // ceil(260 / 32)
    CHECK(big.bottleneck_w == 10);

    const CaeModel desk = build_cae(64, 80, 4, 512, 4);
    CHECK(desk.bottleneck_h == 4);
    CHECK(desk.bottleneck_w == 5);

    CHECK_THROWS_AS(build_cae(8, 8, 4, 512, 4), std::invalid_argument);

    // Decoder output shape equals encoder input shape, odd sizes included.
    Rng rng(75);
    for (auto [h, w, stages] : {std::tuple{33, 21, 3}, {16, 16, 2}, {40, 32, 4}}) {
        CaeModel m = build_cae(h, w, stages, 64, 4);
        init_params(m, rng);
        const Tensor4 x = random_tensor(rng, 1, 1, h, w, 0.5);
        const Tensor4 y = model_infer(m, x, 1);
        CHECK(y.c == 1);
        CHECK(y.h == h);
        CHECK(y.w == w);
    }
}

TEST_CASE("composed model gradient matches finite differences end to end") {
    Rng rng(77);
    CaeModel m = build_cae(12, 10, 2, 16, 4);
    init_params(m, rng);
    Tensor4 x = random_tensor(rng, 2, 1, 12, 10, 0.5);
    const Tensor4 gw = random_tensor(rng, 2, 1, 12, 10);

    auto loss = [&]() {
        CaeModel probe = m;  // isolate running-stat updates
        return weighted_sum(model_forward(probe, x, PassMode::Train, 1, nullptr), gw);
    };

    CaeModel fwd_model = m;
    ForwardTrace trace;
    model_forward(fwd_model, x, PassMode::Train, 1, &trace);
    const std::vector<LayerGrads> grads = model_backward(m, trace, gw, 1);

    // Sample a handful of parameters from every parametric layer. A small
    // step keeps the probes from crossing relu kinks (batchnorm parks many
    // pre-activations near zero); double arithmetic keeps the quotient clean.
    const double h = 1e-6;
    int checked = 0;
    for (size_t li = 0; li < m.layers.size() && checked < 50; ++li) {
        Layer& l = m.layers[li];
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvTranspose) {
            CHECK(param_fd_error(l.weight, grads[li].weight, loss, h, 8) <= 5e-3);
            CHECK(param_fd_error(l.bias, grads[li].bias, loss, h, 2) <= 5e-3);
            checked += 10;
        } else if (l.kind == LayerKind::BatchNorm) {
            CHECK(param_fd_error(l.scale, grads[li].scale, loss, h, 2) <= 5e-3);
            CHECK(param_fd_error(l.shift, grads[li].shift, loss, h, 2) <= 5e-3);
            checked += 4;
        }
    }
    CHECK(checked >= 30);
}

TEST_CASE("reconstruct: zeroed head gives 0.5, dims preserved, output in [0,1]") {
    Rng rng(79);
    CaeModel m = build_cae(16, 16, 2, 16, 4);
    init_params(m, rng);
    // Zero the final conv (just before the sigmoid).
    Layer& head = m.layers[m.layers.size() - 2];
    REQUIRE(head.kind == LayerKind::Conv);
    std::fill(head.weight.begin(), head.weight.end(), 0.0f);
    std::fill(head.bias.begin(), head.bias.end(), 0.0f);

    const GrayImage img = testutil::random_image(rng, 16, 16);
    const GrayImage out = reconstruct(m, img);
    CHECK(out.width == 16);
    CHECK(out.height == 16);
    for (double v : out.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    // Mismatched input dims are center-fitted and mapped back.
    const GrayImage odd = testutil::random_image(rng, 13, 19);
    const GrayImage out2 = reconstruct(m, odd);
    CHECK(out2.width == 13);
    CHECK(out2.height == 19);
    Layer& head2 = m.layers[m.layers.size() - 2];
    for (auto& w : head2.weight) w = 0.5f;
    const GrayImage out3 = reconstruct(m, odd);
    for (double v : out3.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("checkpoint round trip is bitwise and rejects corruption") {
    Rng rng(81);
    CaeModel m = build_cae(16, 12, 2, 16, 4);
    init_params(m, rng);
    Checkpoint ck;
    ck.model = m;
    ck.adam = make_adam_state(m);
    ck.adam.t = 7;
    for (auto& slot : ck.adam.m)
        for (auto& v : slot) v = rng.uniform(-1, 1);
    ck.rng_state = rng.state();
    ck.iterations_done = 123;

    const std::string path = temp_path("rr_ck.rfck");
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.iterations_done == 123);
    CHECK(back.adam.t == 7);
    CHECK(back.rng_state == ck.rng_state);
    REQUIRE(back.model.layers.size() == m.layers.size());
    for (size_t i = 0; i < m.layers.size(); ++i) {
        CHECK(back.model.layers[i].weight == m.layers[i].weight);
        CHECK(back.model.layers[i].bias == m.layers[i].bias);
        CHECK(back.model.layers[i].scale == m.layers[i].scale);
        CHECK(back.model.layers[i].running_var == m.layers[i].running_var);
    }
    for (size_t i = 0; i < ck.adam.m.size(); ++i) CHECK(back.adam.m[i] == ck.adam.m[i]);

    // save(load(x)) is byte-identical.
    const std::string path2 = temp_path("rr_ck2.rfck");
    save_checkpoint(path2, back);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);

    // Corrupted magic is rejected up front.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"), CheckpointError);

    // Truncation is detected.
    {
        std::ifstream in(path2, std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(path, std::ios::binary);
        out.write(all.data(), static_cast<std::streamsize>(all.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

TEST_CASE("training is deterministic, resumable, and logs e_total == e_grad at lambda 0") {
    const int h = 16, w = 12;
    Rng srng(83);
    std::vector<TrainPair> data;
    for (int i = 0; i < 3; ++i) {
        TrainPair p;
        p.latent = testutil::random_image(srng, w, h);
        p.target = binary_stripes(w, h, 6.0);
        data.push_back(p);
    }

    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.epochs = 1;
    cfg.iters_per_epoch = 8;
    cfg.seed = 99;
    cfg.energy.sigma_s = 1.0;
    cfg.energy.sigma_o = 1.0;

    auto fresh_model = [&]() {
        CaeModel m = build_cae(h, w, 2, 16, 4);
        Rng r(55);
        init_params(m, r);
        return m;
    };

    // Two identical runs agree bitwise.
    CaeModel m1 = fresh_model();
    Trainer t1(m1, data, cfg);
    const auto log1 = t1.run(8);
    CaeModel m2 = fresh_model();
    Trainer t2(m2, data, cfg);
    const auto log2 = t2.run(8);
    REQUIRE(log1.size() == log2.size());
    for (size_t i = 0; i < log1.size(); ++i) {
        CHECK(log1[i].e_total == log2[i].e_total);
        CHECK(log1[i].e_grad == log2[i].e_grad);
    }
    for (size_t li = 0; li < m1.layers.size(); ++li)
        CHECK(m1.layers[li].weight == m2.layers[li].weight);

    // Checkpoint at iteration 4 and resume: identical tail and final weights.
    CaeModel m3 = fresh_model();
    Trainer t3(m3, data, cfg);
    auto head = t3.run(4);
    Checkpoint ck;
    ck.model = m3;
    ck.adam = t3.adam();
    ck.rng_state = t3.rng().state();
    ck.iterations_done = t3.iterations_done();
    const std::string path = temp_path("rr_resume.rfck");
    save_checkpoint(path, ck);

    Checkpoint loaded = load_checkpoint(path);
    Trainer t4(loaded.model, data, cfg);
    t4.restore(loaded.adam, loaded.rng_state, loaded.iterations_done);
    const auto tail = t4.run(4);
    REQUIRE(tail.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(tail[i].iter == log1[4 + i].iter);
        CHECK(tail[i].e_total == log1[4 + i].e_total);
    }
    for (size_t li = 0; li < m1.layers.size(); ++li)
        CHECK(loaded.model.layers[li].weight == m1.layers[li].weight);

    // lambda = 0 collapses the objective to the gradient term, exactly.
    TrainConfig cfg0 = cfg;
    cfg0.energy.lambda = 0.0;
    CaeModel m5 = fresh_model();
    Trainer t5(m5, data, cfg0);
    for (const LossRow& row : t5.run(4)) CHECK(row.e_total == row.e_grad);
}

TEST_CASE("training rejects mismatched shapes and reports non-finite layers") {
    Rng rng(87);
    CaeModel m = build_cae(16, 12, 2, 16, 4);
    init_params(m, rng);
    TrainConfig cfg;
    cfg.batch_size = 1;
    cfg.energy.sigma_s = 1.0;
    cfg.energy.sigma_o = 1.0;

    // Wrong image size for the model input.
    std::vector<TrainPair> bad = {
        TrainPair{testutil::random_image(rng, 10, 10), testutil::random_image(rng, 10, 10)}};
    CHECK_THROWS_AS(Trainer(m, bad, cfg), std::invalid_argument);

    // Poison a weight: the failure diagnostic names the offending layer.
    std::vector<TrainPair> data = {
        TrainPair{testutil::random_image(rng, 12, 16), binary_stripes(12, 16, 6.0)}};
    m.layers[0].weight[0] = std::numeric_limits<float>::infinity();
    Trainer t(m, data, cfg);
    CHECK_THROWS_WITH_AS(t.run(1), doctest::Contains("layer"), std::runtime_error);
}

TEST_CASE("loss csv is stable and headerful") {
    std::vector<LossRow> rows = {{1, 0.5, 0.25, 0.125, 0.5375}, {2, 0.4, 0.2, 0.1, 0.43}};
    const std::string path = temp_path("rr_loss.csv");
    write_loss_csv(path, rows);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iter,e_grad,e_ori,e_rel,e_total");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "1,");
}
