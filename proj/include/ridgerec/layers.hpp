#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridgerec/tensor.hpp"

namespace ridgerec {

enum class LayerKind : uint8_t {
    Conv = 0,
    ConvTranspose = 1,
    BatchNorm = 2,
    Relu = 3,
    LeakyRelu = 4,
    Sigmoid = 5,
};

const char* layer_kind_name(LayerKind kind);

// Geometry of a strided "same" convolution: out = ceil(in / stride) with the
// asymmetric zero padding that makes the window cover the input exactly
// (begin = total/2, end = total - begin).
struct ConvGeom {
    int in_c = 0, out_c = 0, k = 0, stride = 1;
    int in_h = 0, in_w = 0;
    int out_h = 0, out_w = 0;
    int pad_top = 0, pad_left = 0;
};

ConvGeom conv_geometry(int in_c, int out_c, int k, int stride, int in_h, int in_w);

// One layer of the autoencoder. Parameter storage is float32: that is the
// checkpoint wire format, and keeping the live values in the same width makes
// save/load and training resume bit-exact. All arithmetic happens in double.
struct Layer {
    LayerKind kind = LayerKind::Conv;
    int in_c = 0, out_c = 0, k = 0, stride = 1;
    double slope = 0.0;        // leaky relu only
    int target_h = 0, target_w = 0;  // transpose only: output spatial dims

    std::vector<float> weight;  // (out_c, in_c, k, k) for conv and transpose
    std::vector<float> bias;    // (out_c)

    std::vector<float> scale, shift;                // batchnorm (per channel)
    std::vector<float> running_mean, running_var;   // batchnorm statistics

    std::string describe() const;
};

// Gradients mirroring a layer's parameters, accumulated in double.
struct LayerGrads {
    std::vector<double> weight, bias, scale, shift;
};

enum class PassMode { Train, Eval };

// threads caps intra-layer parallelism; results are independent of it.
Tensor4 conv2d_forward(const Tensor4& x, const Layer& layer, int threads);
// Returns grad_x; fills grads (summed over the batch in fixed order).
Tensor4 conv2d_backward(const Tensor4& x, const Layer& layer, const Tensor4& grad_out,
                        LayerGrads& grads, int threads);

// Forward is the exact linear adjoint (plus bias) of conv2d_forward with the
// same kernel/stride/padding geometry, mapping (in_c, h, w) up to
// (out_c, target_h, target_w); target defaults to (2h, 2w) when unset.
Tensor4 conv_transpose2d_forward(const Tensor4& x, const Layer& layer, int threads);
Tensor4 conv_transpose2d_backward(const Tensor4& x, const Layer& layer, const Tensor4& grad_out,
                                  LayerGrads& grads, int threads);

// New running statistics produced by a train-mode batchnorm pass. Kept out of
// the layer so that eval-mode forwards stay const and safe to run
// concurrently; the trainer applies the update.
struct BnStatsUpdate {
    std::vector<float> mean, var;
};

// Per-channel batch normalization over (n, h, w); momentum 0.9 on the running
// statistics, variance guard 1e-5. Train mode requires n*h*w >= 2 and fills
// `update` (when given) with the new running statistics.
Tensor4 batchnorm_forward(const Tensor4& x, const Layer& layer, PassMode mode, int threads,
                          BnStatsUpdate* update = nullptr);
Tensor4 batchnorm_backward(const Tensor4& x, const Layer& layer, const Tensor4& grad_out,
                           LayerGrads& grads, int threads);

Tensor4 activation_forward(const Tensor4& x, LayerKind kind, double slope);
Tensor4 activation_backward(const Tensor4& x, LayerKind kind, double slope,
                            const Tensor4& grad_out);

}  // namespace ridgerec
