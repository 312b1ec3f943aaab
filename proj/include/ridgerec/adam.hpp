#pragma once

#include <cstdint>
#include <vector>

#include "ridgerec/model.hpp"

namespace ridgerec {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;  // L2 term added to the gradient
};

// First/second moment accumulators, one slot per trainable parameter array in
// model declaration order (weight, bias per conv; scale, shift per batchnorm).
struct AdamState {
    int64_t t = 0;
    std::vector<std::vector<double>> m, v;
};

AdamState make_adam_state(const CaeModel& model);

// One update of a single parameter array:
//   g' = g + weight_decay * p
//   m <- b1 m + (1-b1) g';  v <- b2 v + (1-b2) g'^2
//   p <- p - lr * mhat / (sqrt(vhat) + eps)        (bias-corrected moments)
// t is the post-increment step count (>= 1).
void adam_update_array(std::vector<float>& p, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v, int64_t t,
                       const AdamConfig& cfg);

// Applies one Adam step to every trainable parameter of the model.
void adam_step(CaeModel& model, const std::vector<LayerGrads>& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace ridgerec
