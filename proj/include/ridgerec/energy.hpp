#pragma once

#include <memory>
#include <vector>

#include "ridgerec/image.hpp"

namespace ridgerec {

struct EnergyParams {
    std::vector<int> orientation_set = {0, 45, 90, 135};  // degrees
    double sigma_s = 3.0;    // structure-tensor smoothing (pixels)
    double sigma_o = 3.0;    // orientation vector-field smoothing (pixels)
    double lambda = 0.1;     // weight of orientation + reliability terms
    double epsilon_r = 1e-8; // reliability guard on the max inertia
    // When true, the cross term enters the minimum inertia with weight 1
    // instead of the coherence-formula weight 2. Kept selectable because the
    // two variants disagree on oblique patterns (reduced form saturates at
    // R = 2/3 on perfect 45-degree ridges).
    bool reduced_cross_inertia = false;
    // Wrap orientation differences into (-pi/2, pi/2] before squaring, so
    // that near-vertical orientations on either side of the wrap compare as
    // close. Disable to penalize the raw angle difference.
    bool wrap_orientation_diff = true;

    void validate() const;
};

// Smoothed gradient outer products. gxx, gyy >= 0; gxy^2 <= gxx*gyy (up to
// rounding slack).
struct StructureTensor {
    int width = 0, height = 0;
    std::vector<double> gxx, gxy, gyy;
};

// Per-pixel dominant gradient direction, radians in (-pi/2, pi/2].
struct OrientationField {
    int width = 0, height = 0;
    std::vector<double> theta;
};

// Per-pixel orientation confidence in [0, 1].
struct ReliabilityField {
    int width = 0, height = 0;
    std::vector<double> r;
};

struct EnergyReport {
    double e_grad = 0, e_ori = 0, e_rel = 0, e_total = 0;
    GrayImage grad_total;  // d e_total / d recon
    int n = 0;             // pixel count
};

// Wrap an angle into (-pi/2, pi/2] (orientations are pi-periodic).
double fold_orientation(double a);

// One directional derivative field per angle in params.orientation_set,
// replicate border.
std::vector<GrayImage> directional_gradients(const GrayImage& image, const EnergyParams& params);

struct GradEnergy {
    double value = 0;
    GrayImage grad;  // d value / d recon
};

// Mean squared directional-derivative difference, averaged over the
// orientation set: (1/|T|) sum_theta (1/n) ||(target - recon) * S_theta||^2.
GradEnergy grad_energy(const GrayImage& target, const GrayImage& recon,
                       const EnergyParams& params);

StructureTensor structure_tensor(const GrayImage& image, const EnergyParams& params);
OrientationField orientation_field(const StructureTensor& tensor);
ReliabilityField reliability_field(const StructureTensor& tensor, const EnergyParams& params);

struct OriRelEnergy {
    double e_ori = 0, e_rel = 0;
    GrayImage grad;  // d (e_ori + e_rel) / d recon
};

OriRelEnergy orientation_reliability_energy(const GrayImage& target, const GrayImage& recon,
                                            const EnergyParams& params);

EnergyReport total_energy(const GrayImage& target, const GrayImage& recon,
                          const EnergyParams& params);

// Precomputed target-side fields for repeated evaluations against a fixed
// target (training loops). Owning handle; contents are private to energy.cpp.
struct TargetCache {
    struct Impl;
    std::shared_ptr<const Impl> impl;
};

TargetCache make_target_cache(const GrayImage& target, const EnergyParams& params);
EnergyReport total_energy(const TargetCache& target, const GrayImage& recon,
                          const EnergyParams& params);

}  // namespace ridgerec
