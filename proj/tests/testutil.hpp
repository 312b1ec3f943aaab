#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ridgerec/energy.hpp"
#include "ridgerec/image.hpp"
#include "ridgerec/rng.hpp"
#include "ridgerec/tensor.hpp"

namespace testutil {

using ridgerec::BorderMode;
using ridgerec::GrayImage;
using ridgerec::Kernel;
using ridgerec::Rng;
using ridgerec::Tensor4;

inline GrayImage random_image(Rng& rng, int w, int h) {
    GrayImage img(w, h);
    for (auto& v : img.data) v = rng.uniform();
    return img;
}

inline Tensor4 random_tensor(Rng& rng, int n, int c, int h, int w, double scale = 1.0) {
    Tensor4 t(n, c, h, w);
    for (auto& v : t.data) v = rng.uniform(-scale, scale);
    return t;
}

// Direct double-sum true convolution, the reference for convolve2d.
inline GrayImage direct_convolve(const GrayImage& img, const Kernel& k, BorderMode border) {
    const int w = img.width, h = img.height, r = k.side / 2;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = -r; ky <= r; ++ky) {
                for (int kx = -r; kx <= r; ++kx) {
                    int sx = x - kx, sy = y - ky;
                    if (sx < 0 || sx >= w || sy < 0 || sy >= h) {
                        if (border == BorderMode::Zero) continue;
                        sx = std::min(std::max(sx, 0), w - 1);
                        sy = std::min(std::max(sy, 0), h - 1);
                    }
                    acc += img.at(sx, sy) * k.at(kx + r, ky + r);
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Central finite differences of a scalar function of an image, compared
// against an analytic gradient: max |g_an - g_fd| / max(||g_fd||_inf, floor).
inline double gradient_check(const GrayImage& x,
                             const std::function<double(const GrayImage&)>& f,
                             const GrayImage& analytic, double h = 1e-4) {
    GrayImage fd(x.width, x.height);
    GrayImage probe = x;
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = probe.data[i];
        probe.data[i] = orig + h;
        const double fp = f(probe);
        probe.data[i] = orig - h;
        const double fm = f(probe);
        probe.data[i] = orig;
        fd.data[i] = (fp - fm) / (2.0 * h);
    }
    const double scale = std::max(max_abs(fd.data), 1e-12);
    double worst = 0.0;
    for (size_t i = 0; i < x.size(); ++i)
        worst = std::max(worst, std::abs(analytic.data[i] - fd.data[i]));
    return worst / scale;
}

// Sinusoidal stripes whose intensity varies along `angle` (the gradient
// direction); ridge tangents run perpendicular to it.
inline GrayImage stripes(int w, int h, double period, double angle_rad, double amplitude = 0.4) {
    GrayImage img(w, h);
    const double fx = std::cos(angle_rad), fy = std::sin(angle_rad);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) =
                0.5 + amplitude * std::sin(2.0 * M_PI * (x * fx + y * fy) / period);
    return img;
}

inline double wrapped_diff(double a, double b) {
    return ridgerec::fold_orientation(a - b);
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace testutil
