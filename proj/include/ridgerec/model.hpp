#pragma once

#include <vector>

#include "ridgerec/image.hpp"
#include "ridgerec/layers.hpp"
#include "ridgerec/rng.hpp"
#include "ridgerec/tensor.hpp"

namespace ridgerec {

// Fully convolutional autoencoder: `stages` blocks of
// [conv k4 s2 -> batchnorm -> relu] down to bottleneck_channels, mirrored by
// [conv_transpose -> batchnorm -> leaky_relu(0.2)] blocks that upsample back
// to the recorded per-stage sizes, closed by a stride-1 conv + sigmoid to one
// channel. Channels double per stage up to the bottleneck.
struct CaeModel {
    int in_h = 0, in_w = 0;
    int stages = 0, bottleneck = 0, ksize = 0;
    int bottleneck_h = 0, bottleneck_w = 0;
    std::vector<Layer> layers;
};

CaeModel build_cae(int in_h, int in_w, int stages, int bottleneck_channels, int kernel_size);

// Gaussian(0, 0.02) conv weights, zero biases, batchnorm scale 1 / shift 0.
void init_params(CaeModel& model, Rng& rng);

// acts[0] is the input, acts[i + 1] the output of layer i.
struct ForwardTrace {
    std::vector<Tensor4> acts;
};

// Train mode records activations into `trace` and applies running-stat
// updates to the model's batchnorm layers.
Tensor4 model_forward(CaeModel& model, const Tensor4& x, PassMode mode, int threads,
                      ForwardTrace* trace);
// Eval-mode forward; does not touch the model, safe to call concurrently.
Tensor4 model_infer(const CaeModel& model, const Tensor4& x, int threads);

std::vector<LayerGrads> model_backward(const CaeModel& model, const ForwardTrace& trace,
                                       const Tensor4& grad_out, int threads);

// Eval-mode reconstruction of a single image. Inputs whose size differs from
// the model's are center-padded/cropped (edge replication) before the pass
// and the output is mapped back, so output dims always equal input dims.
GrayImage reconstruct(const CaeModel& model, const GrayImage& image, int threads = 1);

Tensor4 image_to_tensor(const GrayImage& image);
GrayImage tensor_to_image(const Tensor4& t, int item);

// Throws naming the first layer whose output contains a non-finite value.
void check_finite(const CaeModel& model, const ForwardTrace& trace);

}  // namespace ridgerec
