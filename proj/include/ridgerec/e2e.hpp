#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridgerec/evalkit.hpp"
#include "ridgerec/synth.hpp"
#include "ridgerec/train.hpp"

namespace ridgerec {

// Full experiment: synthesize disjoint train/eval datasets, train the
// autoencoder on latent/target pairs, enhance the evaluation latents, then
// build gallery/probe minutiae sets and compare identification with raw vs
// enhanced probes (CMC curves), plus the mean objective against the targets.
struct E2eConfig {
    uint64_t seed = 42;
    int width = 64, height = 80;
    int eval_identities = 60;
    int eval_impressions = 2;
    int train_identities = 400;
    int stages = 4, bottleneck = 128, ksize = 4;
    TrainConfig train;        // epochs/iters set in make_default
    DegradeParams degrade;    // desk-scale defaults set in make_default
    SynthParams synth;
    MatchTolerances match;
    int extract_border_margin = 4;
    int extract_min_separation = 4;
    double enhance_threshold = 0.5;  // ridge threshold on the net output
    int threads = 0;
    std::string out_dir = "e2e-out";

    static E2eConfig make_default();
};

struct E2eSummary {
    double rank1_raw = 0, rank1_enhanced = 0;
    std::vector<double> cmc_raw, cmc_enhanced;
    double mean_e_degraded = 0, mean_e_enhanced = 0;
    double train_seconds = 0, total_seconds = 0;
};

E2eSummary run_e2e(const E2eConfig& cfg);

// Binarize-thin-extract pipeline pieces shared by the CLI `match` command.
// Adaptive: grayscale with dark ridges (raw latents). DarkThreshold: ridge
// where value <= threshold (binary targets, net outputs). BrightThreshold:
// ridge where value >= threshold. None: input is already a ridge mask.
enum class ProbeBinarize { Adaptive, DarkThreshold, BrightThreshold, None };
std::vector<Minutia> image_minutiae(const GrayImage& image, ProbeBinarize mode, double threshold,
                                    const EnergyParams& energy, int border_margin,
                                    int min_separation);

}  // namespace ridgerec
