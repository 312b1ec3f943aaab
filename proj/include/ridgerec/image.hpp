#pragma once

#include <string>
#include <vector>

namespace ridgerec {

// 2D grayscale raster, row-major, intensities in [0, 1]. Operations that
// produce filter responses (gradients, tensors) reuse this container but are
// documented as unclamped fields.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    size_t size() const { return data.size(); }
    bool same_size(const GrayImage& o) const { return width == o.width && height == o.height; }
};

enum class BorderMode { Replicate, Zero };

// Square odd-sided filter kernel, anchored at the center tap.
struct Kernel {
    int side = 0;                // odd
    std::vector<double> taps;    // row-major, side*side

    double at(int kx, int ky) const { return taps[static_cast<size_t>(ky) * side + kx]; }
    int radius() const { return side / 2; }
};

// Normalized isotropic Gaussian, side = 2*ceil(3*sigma)+1, taps sum to 1.
Kernel make_gaussian(double sigma);

// 3x3 directional derivative kernel (Sobel family) for theta in
// {0, 45, 90, 135} degrees. Taps sum to 0. theta = 0 responds to variation
// along x (columns), theta = 90 along y (rows, increasing downward).
Kernel make_directional(int theta_deg);

// 1-pixel-wide normalized line kernel of `length` taps along `angle_deg`.
Kernel make_motion(int length, double angle_deg);

// True convolution (kernel flipped), "same" output size. The flip convention
// is load-bearing: it makes correlate2d the exact adjoint under zero border.
GrayImage convolve2d(const GrayImage& image, const Kernel& kernel, BorderMode border);

// Cross-correlation, i.e. convolution with the flipped kernel.
GrayImage correlate2d(const GrayImage& image, const Kernel& kernel, BorderMode border);

// Exact adjoint of convolve2d for the given border mode: for all x, y
// <convolve2d(x,K,b), y> == <x, convolve2d_adjoint(y,K,b)>.
// Under zero border this coincides with correlate2d; under replicate border
// the clamped taps fold back onto the edge pixels.
GrayImage convolve2d_adjoint(const GrayImage& field, const Kernel& kernel, BorderMode border);

// Rotation (degrees, about the image center) followed by translation, bilinear
// sampling, out-of-source pixels take `fill`. Output clamped to [0, 1].
GrayImage warp_affine(const GrayImage& image, double rotation_deg, double dx, double dy,
                      double fill);

// Grayscale dilation with a disc structuring element (dx^2 + dy^2 <= r^2).
GrayImage gray_dilate(const GrayImage& image, int radius);

// alpha * background + (1 - alpha) * foreground, clamped to [0, 1].
GrayImage blend(const GrayImage& foreground, const GrayImage& background, double alpha);

// Local adaptive threshold: 1 where intensity < (block mean) - offset, else 0.
// Dark ridges in the source come out as 1. block must be odd and >= 3.
GrayImage adaptive_binarize(const GrayImage& image, int block, double offset);

double clamp01(double v);

}  // namespace ridgerec
