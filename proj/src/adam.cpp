#include "ridgerec/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ridgerec {

namespace {

// Trainable arrays of a layer in declaration order.
std::vector<std::vector<float>*> param_arrays(Layer& l) {
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::ConvTranspose: return {&l.weight, &l.bias};
        case LayerKind::BatchNorm: return {&l.scale, &l.shift};
        default: return {};
    }
}

std::vector<const std::vector<double>*> grad_arrays(const LayerGrads& g, LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv:
        case LayerKind::ConvTranspose: return {&g.weight, &g.bias};
        case LayerKind::BatchNorm: return {&g.scale, &g.shift};
        default: return {};
    }
}

}  // namespace

AdamState make_adam_state(const CaeModel& model) {
    AdamState st;
    for (const Layer& l : model.layers) {
        auto arrays = param_arrays(const_cast<Layer&>(l));
        for (const auto* a : arrays) {
            st.m.emplace_back(a->size(), 0.0);
            st.v.emplace_back(a->size(), 0.0);
        }
    }
    return st;
}

void adam_update_array(std::vector<float>& p, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v, int64_t t,
                       const AdamConfig& cfg) {
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
        throw std::invalid_argument("adam_update_array: size mismatch");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < p.size(); ++i) {
        const double geff = g[i] + cfg.weight_decay * static_cast<double>(p[i]);
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * geff;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * geff * geff;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        const double next = static_cast<double>(p[i]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        p[i] = static_cast<float>(next);
    }
}

void adam_step(CaeModel& model, const std::vector<LayerGrads>& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (grads.size() != model.layers.size())
        throw std::invalid_argument("adam_step: grads do not match model");
    ++state.t;
    size_t slot = 0;
    for (size_t li = 0; li < model.layers.size(); ++li) {
        auto params = param_arrays(model.layers[li]);
        auto g = grad_arrays(grads[li], model.layers[li].kind);
        for (size_t a = 0; a < params.size(); ++a) {
            if (slot >= state.m.size()) throw std::invalid_argument("adam_step: state too small");
            adam_update_array(*params[a], *g[a], state.m[slot], state.v[slot], state.t, cfg);
            ++slot;
        }
    }
    if (slot != state.m.size()) throw std::invalid_argument("adam_step: state size mismatch");
}

}  // namespace ridgerec
