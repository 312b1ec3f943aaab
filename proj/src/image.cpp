#include "ridgerec/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ridgerec {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void check_kernel_fits(const GrayImage& image, const Kernel& kernel) {
    if (kernel.side <= 0 || kernel.side % 2 == 0)
        throw std::invalid_argument("kernel side must be odd and positive");
    if (kernel.side > std::min(image.width, image.height))
        throw std::invalid_argument("kernel side " + std::to_string(kernel.side) +
                                    " exceeds image " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height));
}

}  // namespace

Kernel make_gaussian(double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian sigma must be > 0");
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    const int side = 2 * r + 1;
    Kernel k;
    k.side = side;
    k.taps.resize(static_cast<size_t>(side) * side);
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            k.taps[static_cast<size_t>(dy + r) * side + (dx + r)] = v;
            sum += v;
        }
    }
    for (auto& t : k.taps) t /= sum;
    return k;
}

Kernel make_directional(int theta_deg) {
    // Correlation-form taps; convolve2d flips them, which changes only the
    // sign of the response. Row-major with y increasing downward.
    static const double sobel0[9]   = {-1, 0, 1, -2, 0, 2, -1, 0, 1};   // d/dx
    static const double sobel90[9]  = {-1, -2, -1, 0, 0, 0, 1, 2, 1};   // d/dy
    static const double sobel45[9]  = {-2, -1, 0, -1, 0, 1, 0, 1, 2};   // d along (+x,+y)
    static const double sobel135[9] = {0, -1, -2, 1, 0, -1, 2, 1, 0};   // d along (-x,+y)
    const double* src = nullptr;
    switch (theta_deg) {
        case 0: src = sobel0; break;
        case 45: src = sobel45; break;
        case 90: src = sobel90; break;
        case 135: src = sobel135; break;
        default:
            throw std::invalid_argument("directional kernel angle must be 0, 45, 90 or 135");
    }
    Kernel k;
    k.side = 3;
    k.taps.assign(src, src + 9);
    return k;
}

Kernel make_motion(int length, double angle_deg) {
    if (length < 1) throw std::invalid_argument("motion length must be >= 1");
    const double a = angle_deg * M_PI / 180.0;
    const double cx = std::cos(a), cy = std::sin(a);
    const int r = (length - 1 + 1) / 2;  // ceil((length-1)/2)
    const int side = 2 * r + 1;
    Kernel k;
    k.side = side;
    k.taps.assign(static_cast<size_t>(side) * side, 0.0);
    const double w = 1.0 / length;
    for (int i = 0; i < length; ++i) {
        const double t = i - (length - 1) / 2.0;
        const int px = static_cast<int>(std::lround(t * cx));
        const int py = static_cast<int>(std::lround(t * cy));
        k.taps[static_cast<size_t>(py + r) * side + (px + r)] += w;
    }
    return k;
}

GrayImage convolve2d(const GrayImage& image, const Kernel& kernel, BorderMode border) {
    check_kernel_fits(image, kernel);
    const int w = image.width, h = image.height, r = kernel.radius();
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = -r; ky <= r; ++ky) {
                for (int kx = -r; kx <= r; ++kx) {
                    // True convolution: sample at (x - kx, y - ky).
                    const int sx = x - kx, sy = y - ky;
                    double v;
                    if (sx >= 0 && sx < w && sy >= 0 && sy < h) {
                        v = image.at(sx, sy);
                    } else if (border == BorderMode::Replicate) {
                        v = image.at(clampi(sx, 0, w - 1), clampi(sy, 0, h - 1));
                    } else {
                        continue;
                    }
                    acc += v * kernel.at(kx + r, ky + r);
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

GrayImage correlate2d(const GrayImage& image, const Kernel& kernel, BorderMode border) {
    Kernel flipped;
    flipped.side = kernel.side;
    flipped.taps.assign(kernel.taps.rbegin(), kernel.taps.rend());
    return convolve2d(image, flipped, border);
}

GrayImage convolve2d_adjoint(const GrayImage& field, const Kernel& kernel, BorderMode border) {
    check_kernel_fits(field, kernel);
    const int w = field.width, h = field.height, r = kernel.radius();
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double fy = field.at(x, y);
            if (fy == 0.0) continue;
            for (int ky = -r; ky <= r; ++ky) {
                for (int kx = -r; kx <= r; ++kx) {
                    int sx = x - kx, sy = y - ky;
                    if (sx < 0 || sx >= w || sy < 0 || sy >= h) {
                        if (border == BorderMode::Zero) continue;
                        sx = clampi(sx, 0, w - 1);
                        sy = clampi(sy, 0, h - 1);
                    }
                    out.at(sx, sy) += fy * kernel.at(kx + r, ky + r);
                }
            }
        }
    }
    return out;
}

GrayImage warp_affine(const GrayImage& image, double rotation_deg, double dx, double dy,
                      double fill) {
    const int w = image.width, h = image.height;
    GrayImage out(w, h);
    const double a = rotation_deg * M_PI / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    fill = clamp01(fill);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Inverse map: undo translation, then rotate back about center.
            const double px = x - dx - cx;
            const double py = y - dy - cy;
            const double sx = c * px + s * py + cx;
            const double sy = -s * px + c * py + cy;
            if (sx < 0.0 || sx > w - 1 || sy < 0.0 || sy > h - 1) {
                out.at(x, y) = fill;
                continue;
            }
            const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            const double fx = sx - x0, fy = sy - y0;
            const double v = (1 - fx) * (1 - fy) * image.at(x0, y0) +
                             fx * (1 - fy) * image.at(x1, y0) +
                             (1 - fx) * fy * image.at(x0, y1) +
                             fx * fy * image.at(x1, y1);
            out.at(x, y) = clamp01(v);
        }
    }
    return out;
}

GrayImage gray_dilate(const GrayImage& image, int radius) {
    if (radius < 1) throw std::invalid_argument("dilation radius must be >= 1");
    // Disc offsets, precomputed once per call.
    std::vector<std::pair<int, int>> disc;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) disc.emplace_back(dx, dy);

    const int w = image.width, h = image.height;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m = image.at(x, y);
            for (const auto& [dx, dy] : disc) {
                const int sx = x + dx, sy = y + dy;
                if (sx < 0 || sx >= w || sy < 0 || sy >= h) continue;
                m = std::max(m, image.at(sx, sy));
            }
            out.at(x, y) = m;
        }
    }
    return out;
}

GrayImage blend(const GrayImage& foreground, const GrayImage& background, double alpha) {
    if (!foreground.same_size(background))
        throw std::invalid_argument("blend: image dimensions differ");
    GrayImage out(foreground.width, foreground.height);
    for (size_t i = 0; i < out.size(); ++i)
        out.data[i] = clamp01(alpha * background.data[i] + (1.0 - alpha) * foreground.data[i]);
    return out;
}

GrayImage adaptive_binarize(const GrayImage& image, int block, double offset) {
    if (block < 3 || block % 2 == 0) throw std::invalid_argument("block must be odd and >= 3");
    const int w = image.width, h = image.height, r = block / 2;

    // Summed-area table over a replicate-padded copy, so border windows see
    // the same values the analysis filters do.
    const int pw = w + 2 * r, ph = h + 2 * r;
    std::vector<double> sat(static_cast<size_t>(pw + 1) * (ph + 1), 0.0);
    for (int y = 0; y < ph; ++y) {
        const int sy = clampi(y - r, 0, h - 1);
        for (int x = 0; x < pw; ++x) {
            const int sx = clampi(x - r, 0, w - 1);
            sat[static_cast<size_t>(y + 1) * (pw + 1) + (x + 1)] =
                image.at(sx, sy) + sat[static_cast<size_t>(y) * (pw + 1) + (x + 1)] +
                sat[static_cast<size_t>(y + 1) * (pw + 1) + x] -
                sat[static_cast<size_t>(y) * (pw + 1) + x];
        }
    }
    const double inv_area = 1.0 / (static_cast<double>(block) * block);
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Window [x .. x+block) in padded coords starts at padded (x, y).
            const size_t x0 = x, y0 = y, x1 = x + block, y1 = y + block;
            const double sum = sat[y1 * (pw + 1) + x1] - sat[y0 * (pw + 1) + x1] -
                               sat[y1 * (pw + 1) + x0] + sat[y0 * (pw + 1) + x0];
            const double mean = sum * inv_area;
            out.at(x, y) = (image.at(x, y) < mean - offset) ? 1.0 : 0.0;
        }
    }
    return out;
}

}  // namespace ridgerec
