#include "ridgerec/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ridgerec {

namespace {

Layer make_conv(LayerKind kind, int in_c, int out_c, int k, int stride) {
    Layer l;
    l.kind = kind;
    l.in_c = in_c;
    l.out_c = out_c;
    l.k = k;
    l.stride = stride;
    l.weight.assign(static_cast<size_t>(out_c) * in_c * k * k, 0.0f);
    l.bias.assign(out_c, 0.0f);
    return l;
}

Layer make_bn(int channels) {
    Layer l;
    l.kind = LayerKind::BatchNorm;
    l.in_c = l.out_c = channels;
    l.scale.assign(channels, 1.0f);
    l.shift.assign(channels, 0.0f);
    l.running_mean.assign(channels, 0.0f);
    l.running_var.assign(channels, 1.0f);
    return l;
}

Layer make_act(LayerKind kind, int channels, double slope = 0.0) {
    Layer l;
    l.kind = kind;
    l.in_c = l.out_c = channels;
    l.slope = slope;
    return l;
}

}  // namespace

CaeModel build_cae(int in_h, int in_w, int stages, int bottleneck_channels, int kernel_size) {
    if (stages < 1) throw std::invalid_argument("build_cae: stages must be >= 1");
    const int min_dim = 1 << stages;
    if (in_h < min_dim || in_w < min_dim)
        throw std::invalid_argument("build_cae: input " + std::to_string(in_h) + "x" +
                                    std::to_string(in_w) + " too small for " +
                                    std::to_string(stages) + " stages");
    if (bottleneck_channels < (1 << (stages - 1)))
        throw std::invalid_argument("build_cae: bottleneck channels too small to halve per stage");

    CaeModel m;
    m.in_h = in_h;
    m.in_w = in_w;
    m.stages = stages;
    m.bottleneck = bottleneck_channels;
    m.ksize = kernel_size;

    std::vector<int> ch(stages);
    for (int i = 0; i < stages; ++i) ch[i] = bottleneck_channels >> (stages - 1 - i);

    // Encoder, recording the input size of each stage so the decoder can
    // reproduce it exactly even for odd sizes.
    std::vector<std::pair<int, int>> stage_in(stages);
    int h = in_h, w = in_w, prev_c = 1;
    for (int i = 0; i < stages; ++i) {
        stage_in[i] = {h, w};
        m.layers.push_back(make_conv(LayerKind::Conv, prev_c, ch[i], kernel_size, 2));
        m.layers.push_back(make_bn(ch[i]));
        m.layers.push_back(make_act(LayerKind::Relu, ch[i]));
        h = (h + 1) / 2;
        w = (w + 1) / 2;
        prev_c = ch[i];
    }
    m.bottleneck_h = h;
    m.bottleneck_w = w;

    for (int i = stages - 1; i >= 0; --i) {
        const int out_c = (i > 0) ? ch[i - 1] : ch[0];
        Layer t = make_conv(LayerKind::ConvTranspose, ch[i], out_c, kernel_size, 2);
        t.target_h = stage_in[i].first;
        t.target_w = stage_in[i].second;
        m.layers.push_back(t);
        m.layers.push_back(make_bn(out_c));
        m.layers.push_back(make_act(LayerKind::LeakyRelu, out_c, 0.2));
    }

    m.layers.push_back(make_conv(LayerKind::Conv, ch[0], 1, 3, 1));
    m.layers.push_back(make_act(LayerKind::Sigmoid, 1));
    return m;
}

void init_params(CaeModel& model, Rng& rng) {
    for (Layer& l : model.layers) {
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvTranspose) {
            for (auto& w : l.weight) w = static_cast<float>(rng.normal(0.0, 0.02));
            for (auto& b : l.bias) b = 0.0f;
        } else if (l.kind == LayerKind::BatchNorm) {
            std::fill(l.scale.begin(), l.scale.end(), 1.0f);
            std::fill(l.shift.begin(), l.shift.end(), 0.0f);
            std::fill(l.running_mean.begin(), l.running_mean.end(), 0.0f);
            std::fill(l.running_var.begin(), l.running_var.end(), 1.0f);
        }
    }
}

namespace {

Tensor4 layer_forward(const Layer& layer, const Tensor4& x, PassMode mode, int threads,
                      BnStatsUpdate* bn_update) {
    switch (layer.kind) {
        case LayerKind::Conv: return conv2d_forward(x, layer, threads);
        case LayerKind::ConvTranspose: return conv_transpose2d_forward(x, layer, threads);
        case LayerKind::BatchNorm: return batchnorm_forward(x, layer, mode, threads, bn_update);
        default: return activation_forward(x, layer.kind, layer.slope);
    }
}

}  // namespace

Tensor4 model_forward(CaeModel& model, const Tensor4& x, PassMode mode, int threads,
                      ForwardTrace* trace) {
    if (trace) {
        trace->acts.clear();
        trace->acts.reserve(model.layers.size() + 1);
        trace->acts.push_back(x);
    }
    Tensor4 cur = x;
    for (Layer& layer : model.layers) {
        BnStatsUpdate update;
        const bool bn_train = layer.kind == LayerKind::BatchNorm && mode == PassMode::Train;
        cur = layer_forward(layer, cur, mode, threads, bn_train ? &update : nullptr);
        if (bn_train) {
            layer.running_mean = update.mean;
            layer.running_var = update.var;
        }
        if (trace) trace->acts.push_back(cur);
    }
    return cur;
}

Tensor4 model_infer(const CaeModel& model, const Tensor4& x, int threads) {
    Tensor4 cur = x;
    for (const Layer& layer : model.layers)
        cur = layer_forward(layer, cur, PassMode::Eval, threads, nullptr);
    return cur;
}

std::vector<LayerGrads> model_backward(const CaeModel& model, const ForwardTrace& trace,
                                       const Tensor4& grad_out, int threads) {
    if (trace.acts.size() != model.layers.size() + 1)
        throw std::invalid_argument("model_backward: trace does not match model");
    std::vector<LayerGrads> grads(model.layers.size());
    Tensor4 g = grad_out;
    for (int i = static_cast<int>(model.layers.size()) - 1; i >= 0; --i) {
        const Layer& layer = model.layers[i];
        const Tensor4& x = trace.acts[i];
        switch (layer.kind) {
            case LayerKind::Conv:
                g = conv2d_backward(x, layer, g, grads[i], threads);
                break;
            case LayerKind::ConvTranspose:
                g = conv_transpose2d_backward(x, layer, g, grads[i], threads);
                break;
            case LayerKind::BatchNorm:
                g = batchnorm_backward(x, layer, g, grads[i], threads);
                break;
            default:
                g = activation_backward(x, layer.kind, layer.slope, g);
                break;
        }
    }
    return grads;
}

Tensor4 image_to_tensor(const GrayImage& image) {
    Tensor4 t(1, 1, image.height, image.width);
    t.data = image.data;
    return t;
}

GrayImage tensor_to_image(const Tensor4& t, int item) {
    GrayImage img(t.w, t.h);
    const size_t off = t.index(item, 0, 0, 0);
    for (size_t i = 0; i < img.size(); ++i) img.data[i] = t.data[off + i];
    return img;
}

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Center-aligned resample with edge replication, used both to fit an input to
// the model and to map the output back.
GrayImage center_fit(const GrayImage& src, int out_w, int out_h) {
    if (src.width == out_w && src.height == out_h) return src;
    GrayImage out(out_w, out_h);
    const int offx = (src.width - out_w) / 2;
    const int offy = (src.height - out_h) / 2;
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x)
            out.at(x, y) = src.at(clampi(x + offx, 0, src.width - 1),
                                  clampi(y + offy, 0, src.height - 1));
    return out;
}

}  // namespace

GrayImage reconstruct(const CaeModel& model, const GrayImage& image, int threads) {
    const GrayImage fitted = center_fit(image, model.in_w, model.in_h);
    const Tensor4 out = model_infer(model, image_to_tensor(fitted), threads);
    return center_fit(tensor_to_image(out, 0), image.width, image.height);
}

void check_finite(const CaeModel& model, const ForwardTrace& trace) {
    for (size_t i = 1; i < trace.acts.size(); ++i) {
        for (double v : trace.acts[i].data) {
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite activation in layer " + std::to_string(i - 1) +
                                         " (" + model.layers[i - 1].describe() + ")");
        }
    }
}

}  // namespace ridgerec
