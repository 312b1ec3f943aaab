#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ridgerec/energy.hpp"
#include "ridgerec/image.hpp"

namespace ridgerec {

// Zero-pole ridge-flow model: loops add a +1/2 index singularity, deltas a
// -1/2 one, on top of a uniform base direction.
struct SingularityModel {
    std::vector<std::pair<double, double>> loops;   // (x, y)
    std::vector<std::pair<double, double>> deltas;  // (x, y)
    double base_angle = 0.0;                        // radians, ridge tangent

    void validate(int width, int height) const;
};

// Ridge tangent direction at every pixel, folded into (-pi/2, pi/2].
// Evaluation exactly on a singular point returns the base angle.
OrientationField orientation_model(const SingularityModel& model, int width, int height);

// Iterative oriented-Gabor synthesis: seeded random impulses are filtered
// repeatedly with kernels oriented by the flow model at frequency
// 1/ridge_period, contrast-normalized each pass, then vignetted so the print
// fades to white paper at the border. Ridges come out dark.
GrayImage synth_master(uint64_t seed, const SingularityModel& model, double ridge_period,
                       int iterations, int width, int height);

struct DegradeParams {
    double rotation_min_deg = -15.0, rotation_max_deg = 15.0;
    double translation_frac = 0.10;  // +- fraction of width/height
    int blur_len_min = 3, blur_len_max = 11;
    double blur_angle_min_deg = 0.0, blur_angle_max_deg = 180.0;
    int dilate_radius_max = 2;  // radius drawn uniformly from {0..max}
    double alpha_min = 0.3, alpha_max = 0.7;
    int occlusion_max = 2;  // rectangle count drawn from {0..max}
    double occlusion_frac_min = 0.05, occlusion_frac_max = 0.15;  // of image area
    double noise_sigma = 3.5e-3;

    void validate() const;
};

// The parameter values actually drawn for one impression.
struct DrawnDegrade {
    double rotation_deg = 0, dx = 0, dy = 0;
    int blur_len = 1;
    double blur_angle_deg = 0;
    int dilate_radius = 0;
    double alpha = 0;
    int background_index = 0;
    std::vector<std::array<int, 4>> occlusions;  // x, y, w, h
    double noise_sigma = 0;
};

struct DegradeResult {
    GrayImage latent;
    DrawnDegrade drawn;
};

// Degradation pipeline: warp -> motion blur -> dilation -> background blend
// -> occlusions (filled with background) -> additive Gaussian noise -> clamp.
// All draws come from `seed`; backgrounds must be nonempty and master-sized.
DegradeResult degrade(const GrayImage& master, const DegradeParams& params,
                      const std::vector<GrayImage>& backgrounds, uint64_t seed);

// Paper-grain plus line-clutter textures, so no external assets are needed.
std::vector<GrayImage> procedural_backgrounds(int width, int height, int count, uint64_t seed);

struct SynthParams {
    double ridge_period_min = 8.0, ridge_period_max = 12.0;
    int gabor_iterations = 6;
    int background_count = 8;
    int binarize_block = 17;
    double binarize_offset = 0.02;

    void validate() const;
};

struct SynthRecord {
    int id = 0;
    std::string master, target, latent;  // paths relative to the manifest
    uint64_t seed = 0;
    DrawnDegrade params;
};

struct DatasetManifest {
    std::string dir;  // directory the relative paths resolve against
    std::vector<SynthRecord> records;
};

// Per identity: one master, one binarized target, `impressions` independent
// degradations. Layout and content are a pure function of the seed.
DatasetManifest make_dataset(int n_identities, int impressions, const std::string& out_dir,
                             uint64_t seed, int width, int height, const DegradeParams& degrade,
                             const SynthParams& synth);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

std::string resolve_path(const DatasetManifest& manifest, const std::string& rel);

}  // namespace ridgerec
