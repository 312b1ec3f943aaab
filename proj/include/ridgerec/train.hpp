#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridgerec/adam.hpp"
#include "ridgerec/energy.hpp"
#include "ridgerec/model.hpp"
#include "ridgerec/rng.hpp"

namespace ridgerec {

struct TrainConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 1e-4;
    int batch_size = 12;
    int epochs = 400;
    int iters_per_epoch = 64;
    double noise_sigma = 3.5e-3;  // i.i.d. Gaussian input augmentation
    uint64_t seed = 42;
    int threads = 1;
    EnergyParams energy;  // carries lambda and the field parameters

    int64_t total_iterations() const {
        return static_cast<int64_t>(epochs) * iters_per_epoch;
    }
    void validate() const;
};

struct TrainPair {
    GrayImage latent;
    GrayImage target;  // binarized, values in {0, 1}
};

struct LossRow {
    int64_t iter = 0;  // 1-based, global across resumes
    double e_grad = 0, e_ori = 0, e_rel = 0, e_total = 0;
};

// Writes "iter,e_grad,e_ori,e_rel,e_total" rows; %.17g so logs round-trip and
// identical runs produce identical files.
void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows);

// Owns the optimizer and RNG so training can be paused, checkpointed and
// resumed with a loss stream identical to an uninterrupted run.
class Trainer {
public:
    Trainer(CaeModel& model, std::vector<TrainPair> data, TrainConfig cfg);

    // Restore optimizer/RNG position from a checkpoint.
    void restore(AdamState adam, const std::array<uint64_t, 4>& rng_state, int64_t iters_done);

    // Runs n iterations, returning one loss row per iteration.
    std::vector<LossRow> run(int64_t n_iters);

    int64_t iterations_done() const { return iters_done_; }
    const AdamState& adam() const { return adam_; }
    const Rng& rng() const { return rng_; }
    CaeModel& model() { return model_; }

private:
    LossRow step();

    CaeModel& model_;
    std::vector<TrainPair> data_;
    std::vector<TargetCache> caches_;  // populated for small datasets only
    TrainConfig cfg_;
    AdamState adam_;
    Rng rng_;
    int64_t iters_done_ = 0;
};

}  // namespace ridgerec
