#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ridgerec {

// Dense NCHW tensor. Activations and their gradients are double; trainable
// parameters live in float arrays on the layers (see layers.hpp).
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0) {}

    size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix;
    }
    double& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    double at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

}  // namespace ridgerec
