#include "ridgerec/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "ridgerec/parallel.hpp"

namespace ridgerec {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;

size_t widx(const Layer& l, int oc, int ic, int ky, int kx) {
    return ((static_cast<size_t>(oc) * l.in_c + ic) * l.k + ky) * l.k + kx;
}

void check_channels(const Tensor4& x, const Layer& layer) {
    if (x.c != layer.in_c)
        throw std::invalid_argument(std::string("channel mismatch in ") + layer.describe() +
                                    ": input has " + std::to_string(x.c) + ", expected " +
                                    std::to_string(layer.in_c));
}

// Dot product with four independent partial sums: breaks the loop-carried
// dependency so the FP units stay busy. Fixed grouping, deterministic.
inline double dot_n(const double* a, const double* b, int n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// Valid tap interval for output index o: taps k with 0 <= o*stride - pad + k < n.
inline void tap_range(int o, int stride, int pad, int k, int n, int& lo, int& hi) {
    const int base = o * stride - pad;
    lo = base < 0 ? -base : 0;
    hi = n - base < k ? n - base : k;
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::ConvTranspose: return "conv_transpose";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Relu: return "relu";
        case LayerKind::LeakyRelu: return "leaky_relu";
        case LayerKind::Sigmoid: return "sigmoid";
    }
    return "?";
}

std::string Layer::describe() const {
    std::string s = layer_kind_name(kind);
    if (kind == LayerKind::Conv || kind == LayerKind::ConvTranspose)
        s += " " + std::to_string(in_c) + "->" + std::to_string(out_c) + " k" + std::to_string(k) +
             " s" + std::to_string(stride);
    else if (kind == LayerKind::BatchNorm)
        s += " c" + std::to_string(out_c);
    return s;
}

ConvGeom conv_geometry(int in_c, int out_c, int k, int stride, int in_h, int in_w) {
    ConvGeom g;
    g.in_c = in_c;
    g.out_c = out_c;
    g.k = k;
    g.stride = stride;
    g.in_h = in_h;
    g.in_w = in_w;
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    // (k-1)/2 leading pad: the window for output index o starts at
    // o*stride - (k-1)/2, so the center tap of an odd kernel lands on the
    // stride grid; trailing overhang is implicit zero padding.
    g.pad_top = (k - 1) / 2;
    g.pad_left = (k - 1) / 2;
    return g;
}

namespace {

// Scratch layouts: activations as (spatial, channel) and weights as
// (tap, out, in), so every inner loop runs unit-stride. Purely a data
// layout change; summation order stays fixed, independent of threads.

// x slice of one batch item -> xt[(y * w + x) * c + ic]
void to_spatial_major(const Tensor4& x, int item, std::vector<double>& xt) {
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    xt.assign(plane * x.c, 0.0);
    for (int c = 0; c < x.c; ++c) {
        const double* src = &x.data[x.index(item, c, 0, 0)];
        double* dst = xt.data() + c;
        for (size_t i = 0; i < plane; ++i) dst[i * x.c] = src[i];
    }
}

void from_spatial_major(const std::vector<double>& yt, Tensor4& y, int item) {
    const size_t plane = static_cast<size_t>(y.h) * y.w;
    for (int c = 0; c < y.c; ++c) {
        double* dst = &y.data[y.index(item, c, 0, 0)];
        const double* src = yt.data() + c;
        for (size_t i = 0; i < plane; ++i) dst[i] = src[i * y.c];
    }
}

// weight (out, in, ky, kx) -> wt[((ky * k + kx) * out + oc) * in + ic]
void weight_tap_major(const Layer& l, std::vector<double>& wt) {
    wt.assign(l.weight.size(), 0.0);
    const size_t kk = static_cast<size_t>(l.k) * l.k;
    for (int oc = 0; oc < l.out_c; ++oc)
        for (int ic = 0; ic < l.in_c; ++ic)
            for (size_t t = 0; t < kk; ++t)
                wt[(t * l.out_c + oc) * l.in_c + ic] =
                    l.weight[(static_cast<size_t>(oc) * l.in_c + ic) * kk + t];
}

// weight (out, in, ky, kx) -> wt[((ky * k + kx) * in + ic) * out + oc]
void weight_tap_major_swapped(const Layer& l, std::vector<double>& wt) {
    wt.assign(l.weight.size(), 0.0);
    const size_t kk = static_cast<size_t>(l.k) * l.k;
    for (int oc = 0; oc < l.out_c; ++oc)
        for (int ic = 0; ic < l.in_c; ++ic)
            for (size_t t = 0; t < kk; ++t)
                wt[(t * l.in_c + ic) * l.out_c + oc] =
                    l.weight[(static_cast<size_t>(oc) * l.in_c + ic) * kk + t];
}

}  // namespace

Tensor4 conv2d_forward(const Tensor4& x, const Layer& layer, int threads) {
    check_channels(x, layer);
    const ConvGeom g = conv_geometry(layer.in_c, layer.out_c, layer.k, layer.stride, x.h, x.w);
    Tensor4 y(x.n, g.out_c, g.out_h, g.out_w);

    std::vector<double> wt;
    weight_tap_major(layer, wt);

    parallel_for(0, x.n, threads, [&](int item) {
        std::vector<double> xt, yt;
        to_spatial_major(x, item, xt);
        yt.assign(static_cast<size_t>(g.out_h) * g.out_w * g.out_c, 0.0);
        for (int oy = 0; oy < g.out_h; ++oy) {
            int ky0, ky1;
            tap_range(oy, g.stride, g.pad_top, g.k, x.h, ky0, ky1);
            const int iy_base = oy * g.stride - g.pad_top;
            for (int ox = 0; ox < g.out_w; ++ox) {
                int kx0, kx1;
                tap_range(ox, g.stride, g.pad_left, g.k, x.w, kx0, kx1);
                const int ix_base = ox * g.stride - g.pad_left;
                double* out = &yt[(static_cast<size_t>(oy) * g.out_w + ox) * g.out_c];
                for (int oc = 0; oc < g.out_c; ++oc) out[oc] = layer.bias[oc];
                for (int ky = ky0; ky < ky1; ++ky) {
                    for (int kx = kx0; kx < kx1; ++kx) {
                        const double* xv =
                            &xt[(static_cast<size_t>(iy_base + ky) * x.w + ix_base + kx) *
                                g.in_c];
                        const double* wrow =
                            &wt[static_cast<size_t>(ky * g.k + kx) * g.out_c * g.in_c];
                        for (int oc = 0; oc < g.out_c; ++oc)
                            out[oc] += dot_n(wrow + static_cast<size_t>(oc) * g.in_c, xv, g.in_c);
                    }
                }
            }
        }
        from_spatial_major(yt, y, item);
    });
    return y;
}

Tensor4 conv2d_backward(const Tensor4& x, const Layer& layer, const Tensor4& grad_out,
                        LayerGrads& grads, int threads) {
    check_channels(x, layer);
    const ConvGeom g = conv_geometry(layer.in_c, layer.out_c, layer.k, layer.stride, x.h, x.w);
    if (grad_out.n != x.n || grad_out.c != g.out_c || grad_out.h != g.out_h ||
        grad_out.w != g.out_w)
        throw std::invalid_argument("conv2d_backward: grad_out shape mismatch");

    grads.weight.assign(layer.weight.size(), 0.0);
    grads.bias.assign(layer.bias.size(), 0.0);
    Tensor4 gx(x.n, x.c, x.h, x.w);

    std::vector<double> wt_sw;
    weight_tap_major_swapped(layer, wt_sw);  // (tap, ic, oc)

    // d x, parallel over batch items.
    parallel_for(0, x.n, threads, [&](int item) {
        std::vector<double> got, gxt;
        to_spatial_major(grad_out, item, got);
        gxt.assign(static_cast<size_t>(x.h) * x.w * g.in_c, 0.0);
        for (int oy = 0; oy < g.out_h; ++oy) {
            int ky0, ky1;
            tap_range(oy, g.stride, g.pad_top, g.k, x.h, ky0, ky1);
            const int iy_base = oy * g.stride - g.pad_top;
            for (int ox = 0; ox < g.out_w; ++ox) {
                int kx0, kx1;
                tap_range(ox, g.stride, g.pad_left, g.k, x.w, kx0, kx1);
                const int ix_base = ox * g.stride - g.pad_left;
                const double* gov =
                    &got[(static_cast<size_t>(oy) * g.out_w + ox) * g.out_c];
                for (int ky = ky0; ky < ky1; ++ky) {
                    for (int kx = kx0; kx < kx1; ++kx) {
                        double* gxv =
                            &gxt[(static_cast<size_t>(iy_base + ky) * x.w + ix_base + kx) *
                                 g.in_c];
                        const double* wrow =
                            &wt_sw[static_cast<size_t>(ky * g.k + kx) * g.out_c * g.in_c];
                        for (int ic = 0; ic < g.in_c; ++ic)
                            gxv[ic] +=
                                dot_n(wrow + static_cast<size_t>(ic) * g.out_c, gov, g.out_c);
                    }
                }
            }
        }
        from_spatial_major(gxt, gx, item);
    });

    // d weight / d bias: per output channel, fixed order over items and
    // positions, so the result does not depend on the thread count.
    std::vector<std::vector<double>> xts(x.n), gots(x.n);
    for (int item = 0; item < x.n; ++item) {
        to_spatial_major(x, item, xts[item]);
        to_spatial_major(grad_out, item, gots[item]);
    }
    const size_t kk = static_cast<size_t>(g.k) * g.k;
    parallel_for(0, g.out_c, threads, [&](int oc) {
        std::vector<double> acc(kk * g.in_c, 0.0);
        double bsum = 0.0;
        for (int item = 0; item < x.n; ++item) {
            const std::vector<double>& xt = xts[item];
            const std::vector<double>& got = gots[item];
            for (int oy = 0; oy < g.out_h; ++oy) {
                int ky0, ky1;
                tap_range(oy, g.stride, g.pad_top, g.k, x.h, ky0, ky1);
                const int iy_base = oy * g.stride - g.pad_top;
                for (int ox = 0; ox < g.out_w; ++ox) {
                    const double go =
                        got[(static_cast<size_t>(oy) * g.out_w + ox) * g.out_c + oc];
                    if (go == 0.0) continue;
                    bsum += go;
                    int kx0, kx1;
                    tap_range(ox, g.stride, g.pad_left, g.k, x.w, kx0, kx1);
                    const int ix_base = ox * g.stride - g.pad_left;
                    for (int ky = ky0; ky < ky1; ++ky) {
                        for (int kx = kx0; kx < kx1; ++kx) {
                            const double* xv =
                                &xt[(static_cast<size_t>(iy_base + ky) * x.w + ix_base + kx) *
                                    g.in_c];
                            double* arow = &acc[(static_cast<size_t>(ky) * g.k + kx) * g.in_c];
                            for (int ic = 0; ic < g.in_c; ++ic) arow[ic] += go * xv[ic];
                        }
                    }
                }
            }
        }
        for (int ic = 0; ic < g.in_c; ++ic)
            for (size_t t = 0; t < kk; ++t)
                grads.weight[(static_cast<size_t>(oc) * g.in_c + ic) * kk + t] =
                    acc[t * g.in_c + ic];
        grads.bias[oc] = bsum;
    });
    return gx;
}

namespace {

// For transposed convolution: the (tap, source) pairs contributing to output
// index t are k with (t + pad - k) divisible by stride and the quotient a
// valid source index. At stride 2 there are at most ceil(k/2) of them.
struct TapSources {
    std::vector<std::array<int, 2>> pairs;  // (tap k, source o)
};

std::vector<TapSources> tap_sources(int extent, int stride, int pad, int k, int n_src) {
    std::vector<TapSources> out(extent);
    for (int t = 0; t < extent; ++t) {
        for (int tap = 0; tap < k; ++tap) {
            const int num = t + pad - tap;
            if (num < 0 || num % stride != 0) continue;
            const int src = num / stride;
            if (src >= n_src) continue;
            out[t].pairs.push_back({tap, src});
        }
    }
    return out;
}

}  // namespace

Tensor4 conv_transpose2d_forward(const Tensor4& x, const Layer& layer, int threads) {
    check_channels(x, layer);
    const int th = layer.target_h > 0 ? layer.target_h : 2 * x.h;
    const int tw = layer.target_w > 0 ? layer.target_w : 2 * x.w;
    // Geometry of the convolution this layer is the adjoint of: it maps
    // (out_c, th, tw) down to (in_c, x.h, x.w).
    const ConvGeom g = conv_geometry(layer.out_c, layer.in_c, layer.k, layer.stride, th, tw);
    if (g.out_h != x.h || g.out_w != x.w)
        throw std::invalid_argument("conv_transpose2d: input " + std::to_string(x.h) + "x" +
                                    std::to_string(x.w) + " cannot upsample to " +
                                    std::to_string(th) + "x" + std::to_string(tw));

    const auto ys = tap_sources(th, g.stride, g.pad_top, g.k, x.h);
    const auto xs = tap_sources(tw, g.stride, g.pad_left, g.k, x.w);

    std::vector<double> wt;
    weight_tap_major(layer, wt);  // (tap, c_out, f_in)

    Tensor4 y(x.n, layer.out_c, th, tw);
    parallel_for(0, x.n, threads, [&](int item) {
        std::vector<double> xt, yt;
        to_spatial_major(x, item, xt);
        yt.assign(static_cast<size_t>(th) * tw * layer.out_c, 0.0);
        for (int ty = 0; ty < th; ++ty) {
            for (int tx = 0; tx < tw; ++tx) {
                double* out = &yt[(static_cast<size_t>(ty) * tw + tx) * layer.out_c];
                for (int c = 0; c < layer.out_c; ++c) out[c] = layer.bias[c];
                for (const auto& [ky, oy] : ys[ty].pairs) {
                    for (const auto& [kx, ox] : xs[tx].pairs) {
                        const double* xv =
                            &xt[(static_cast<size_t>(oy) * x.w + ox) * layer.in_c];
                        const double* wrow =
                            &wt[static_cast<size_t>(ky * g.k + kx) * layer.out_c * layer.in_c];
                        for (int c = 0; c < layer.out_c; ++c)
                            out[c] += dot_n(wrow + static_cast<size_t>(c) * layer.in_c, xv,
                                            layer.in_c);
                    }
                }
            }
        }
        from_spatial_major(yt, y, item);
    });
    return y;
}

Tensor4 conv_transpose2d_backward(const Tensor4& x, const Layer& layer, const Tensor4& grad_out,
                                  LayerGrads& grads, int threads) {
    check_channels(x, layer);
    const int th = layer.target_h > 0 ? layer.target_h : 2 * x.h;
    const int tw = layer.target_w > 0 ? layer.target_w : 2 * x.w;
    const ConvGeom g = conv_geometry(layer.out_c, layer.in_c, layer.k, layer.stride, th, tw);
    if (grad_out.n != x.n || grad_out.c != layer.out_c || grad_out.h != th || grad_out.w != tw)
        throw std::invalid_argument("conv_transpose2d_backward: grad_out shape mismatch");

    grads.weight.assign(layer.weight.size(), 0.0);
    grads.bias.assign(layer.bias.size(), 0.0);
    Tensor4 gx(x.n, x.c, x.h, x.w);

    std::vector<double> wt_sw;
    weight_tap_major_swapped(layer, wt_sw);  // (tap, f_in, c_out)

    // d x is the strided convolution of grad_out with the same weights.
    parallel_for(0, x.n, threads, [&](int item) {
        std::vector<double> got, gxt;
        to_spatial_major(grad_out, item, got);
        gxt.assign(static_cast<size_t>(x.h) * x.w * layer.in_c, 0.0);
        for (int oy = 0; oy < x.h; ++oy) {
            int ky0, ky1;
            tap_range(oy, g.stride, g.pad_top, g.k, th, ky0, ky1);
            const int ty_base = oy * g.stride - g.pad_top;
            for (int ox = 0; ox < x.w; ++ox) {
                int kx0, kx1;
                tap_range(ox, g.stride, g.pad_left, g.k, tw, kx0, kx1);
                const int tx_base = ox * g.stride - g.pad_left;
                double* gxv = &gxt[(static_cast<size_t>(oy) * x.w + ox) * layer.in_c];
                for (int ky = ky0; ky < ky1; ++ky) {
                    for (int kx = kx0; kx < kx1; ++kx) {
                        const double* gov =
                            &got[(static_cast<size_t>(ty_base + ky) * tw + tx_base + kx) *
                                 layer.out_c];
                        const double* wrow =
                            &wt_sw[static_cast<size_t>(ky * g.k + kx) * layer.out_c *
                                   layer.in_c];
                        for (int f = 0; f < layer.in_c; ++f)
                            gxv[f] += dot_n(wrow + static_cast<size_t>(f) * layer.out_c, gov,
                                            layer.out_c);
                    }
                }
            }
        }
        from_spatial_major(gxt, gx, item);
    });

    // d weight / d bias, per output channel in fixed order.
    std::vector<std::vector<double>> xts(x.n), gots(x.n);
    for (int item = 0; item < x.n; ++item) {
        to_spatial_major(x, item, xts[item]);
        to_spatial_major(grad_out, item, gots[item]);
    }
    const size_t kk = static_cast<size_t>(g.k) * g.k;
    parallel_for(0, layer.out_c, threads, [&](int c) {
        std::vector<double> acc(kk * layer.in_c, 0.0);
        double bsum = 0.0;
        for (int item = 0; item < x.n; ++item) {
            const std::vector<double>& xt = xts[item];
            const std::vector<double>& got = gots[item];
            for (size_t i = 0; i < static_cast<size_t>(th) * tw; ++i)
                bsum += got[i * layer.out_c + c];
            for (int oy = 0; oy < x.h; ++oy) {
                int ky0, ky1;
                tap_range(oy, g.stride, g.pad_top, g.k, th, ky0, ky1);
                const int ty_base = oy * g.stride - g.pad_top;
                for (int ox = 0; ox < x.w; ++ox) {
                    int kx0, kx1;
                    tap_range(ox, g.stride, g.pad_left, g.k, tw, kx0, kx1);
                    const int tx_base = ox * g.stride - g.pad_left;
                    const double* xv =
                        &xt[(static_cast<size_t>(oy) * x.w + ox) * layer.in_c];
                    for (int ky = ky0; ky < ky1; ++ky) {
                        for (int kx = kx0; kx < kx1; ++kx) {
                            const double go =
                                got[(static_cast<size_t>(ty_base + ky) * tw + tx_base + kx) *
                                        layer.out_c +
                                    c];
                            if (go == 0.0) continue;
                            double* arow =
                                &acc[(static_cast<size_t>(ky) * g.k + kx) * layer.in_c];
                            for (int f = 0; f < layer.in_c; ++f) arow[f] += go * xv[f];
                        }
                    }
                }
            }
        }
        for (int f = 0; f < layer.in_c; ++f)
            for (size_t t = 0; t < kk; ++t)
                grads.weight[(static_cast<size_t>(c) * layer.in_c + f) * kk + t] =
                    acc[t * layer.in_c + f];
        grads.bias[c] = bsum;
    });
    return gx;
}

Tensor4 batchnorm_forward(const Tensor4& x, const Layer& layer, PassMode mode, int threads,
                          BnStatsUpdate* update) {
    if (x.c != layer.out_c)
        throw std::invalid_argument("batchnorm: channel mismatch");
    const size_t m = static_cast<size_t>(x.n) * x.h * x.w;
    if (mode == PassMode::Train && m < 2)
        throw std::invalid_argument("batchnorm train mode needs n*h*w >= 2");
    if (update) {
        update->mean.assign(layer.running_mean.begin(), layer.running_mean.end());
        update->var.assign(layer.running_var.begin(), layer.running_var.end());
    }

    Tensor4 y(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    parallel_for(0, x.c, threads, [&](int c) {
        double mean, var;
        if (mode == PassMode::Train) {
            double sum = 0.0, sq = 0.0;
            for (int in = 0; in < x.n; ++in) {
                const double* src = &x.data[x.index(in, c, 0, 0)];
                for (size_t i = 0; i < plane; ++i) {
                    sum += src[i];
                    sq += src[i] * src[i];
                }
            }
            mean = sum / static_cast<double>(m);
            var = sq / static_cast<double>(m) - mean * mean;
            if (var < 0.0) var = 0.0;
            if (update) {
                update->mean[c] = static_cast<float>(kBnMomentum * layer.running_mean[c] +
                                                     (1.0 - kBnMomentum) * mean);
                update->var[c] = static_cast<float>(kBnMomentum * layer.running_var[c] +
                                                    (1.0 - kBnMomentum) * var);
            }
        } else {
            mean = layer.running_mean[c];
            var = layer.running_var[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + kBnEps);
        const double sc = layer.scale[c], sh = layer.shift[c];
        for (int in = 0; in < x.n; ++in) {
            const double* src = &x.data[x.index(in, c, 0, 0)];
            double* dst = &y.data[y.index(in, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) dst[i] = sc * (src[i] - mean) * inv_std + sh;
        }
    });
    return y;
}

Tensor4 batchnorm_backward(const Tensor4& x, const Layer& layer, const Tensor4& grad_out,
                           LayerGrads& grads, int threads) {
    if (!x.same_shape(grad_out))
        throw std::invalid_argument("batchnorm_backward: shape mismatch");
    const size_t m = static_cast<size_t>(x.n) * x.h * x.w;
    grads.scale.assign(layer.scale.size(), 0.0);
    grads.shift.assign(layer.shift.size(), 0.0);
    Tensor4 gx(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    const double inv_m = 1.0 / static_cast<double>(m);

    parallel_for(0, x.c, threads, [&](int c) {
        // Recompute the train-mode batch statistics this layer normalized with.
        double sum = 0.0, sq = 0.0;
        for (int in = 0; in < x.n; ++in) {
            const double* src = &x.data[x.index(in, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) {
                sum += src[i];
                sq += src[i] * src[i];
            }
        }
        const double mean = sum * inv_m;
        double var = sq * inv_m - mean * mean;
        if (var < 0.0) var = 0.0;
        const double inv_std = 1.0 / std::sqrt(var + kBnEps);

        double g_sum = 0.0, gx_sum = 0.0;  // sum(dy), sum(dy * xhat)
        for (int in = 0; in < x.n; ++in) {
            const double* src = &x.data[x.index(in, c, 0, 0)];
            const double* go = &grad_out.data[grad_out.index(in, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) {
                g_sum += go[i];
                gx_sum += go[i] * (src[i] - mean) * inv_std;
            }
        }
        grads.shift[c] = g_sum;
        grads.scale[c] = gx_sum;

        const double sc = layer.scale[c];
        for (int in = 0; in < x.n; ++in) {
            const double* src = &x.data[x.index(in, c, 0, 0)];
            const double* go = &grad_out.data[grad_out.index(in, c, 0, 0)];
            double* dst = &gx.data[gx.index(in, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) {
                const double xhat = (src[i] - mean) * inv_std;
                dst[i] = sc * inv_std * (go[i] - g_sum * inv_m - xhat * gx_sum * inv_m);
            }
        }
    });
    return gx;
}

Tensor4 activation_forward(const Tensor4& x, LayerKind kind, double slope) {
    Tensor4 y(x.n, x.c, x.h, x.w);
    switch (kind) {
        case LayerKind::Relu:
            // 0.0 * x rather than a literal zero so non-finite inputs
            // propagate instead of being silently clipped away.
            for (size_t i = 0; i < x.size(); ++i)
                y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0 * x.data[i];
            break;
        case LayerKind::LeakyRelu:
            for (size_t i = 0; i < x.size(); ++i)
                y.data[i] = x.data[i] > 0.0 ? x.data[i] : slope * x.data[i];
            break;
        case LayerKind::Sigmoid:
            for (size_t i = 0; i < x.size(); ++i) y.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
            break;
        default:
            throw std::invalid_argument("activation_forward: not an activation");
    }
    return y;
}

Tensor4 activation_backward(const Tensor4& x, LayerKind kind, double slope,
                            const Tensor4& grad_out) {
    if (!x.same_shape(grad_out))
        throw std::invalid_argument("activation_backward: shape mismatch");
    Tensor4 gx(x.n, x.c, x.h, x.w);
    switch (kind) {
        case LayerKind::Relu:
            for (size_t i = 0; i < x.size(); ++i)
                gx.data[i] = x.data[i] > 0.0 ? grad_out.data[i] : 0.0 * x.data[i];
            break;
        case LayerKind::LeakyRelu:
            for (size_t i = 0; i < x.size(); ++i)
                gx.data[i] = x.data[i] > 0.0 ? grad_out.data[i] : slope * grad_out.data[i];
            break;
        case LayerKind::Sigmoid:
            for (size_t i = 0; i < x.size(); ++i) {
                const double s = 1.0 / (1.0 + std::exp(-x.data[i]));
                gx.data[i] = grad_out.data[i] * s * (1.0 - s);
            }
            break;
        default:
            throw std::invalid_argument("activation_backward: not an activation");
    }
    return gx;
}

}  // namespace ridgerec
