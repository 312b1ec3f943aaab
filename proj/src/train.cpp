#include "ridgerec/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ridgerec/parallel.hpp"

namespace ridgerec {

void TrainConfig::validate() const {
    if (lr <= 0 || adam_eps <= 0) throw std::invalid_argument("learning rate and eps must be > 0");
    if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
        throw std::invalid_argument("beta1 and beta2 must be in (0, 1)");
    if (weight_decay < 0) throw std::invalid_argument("weight decay must be >= 0");
    if (batch_size < 1 || epochs < 1 || iters_per_epoch < 1)
        throw std::invalid_argument("batch size, epochs and iterations must be >= 1");
    if (noise_sigma < 0) throw std::invalid_argument("noise sigma must be >= 0");
    energy.validate();
}

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "iter,e_grad,e_ori,e_rel,e_total\n";
    char buf[256];
    for (const LossRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(r.iter), r.e_grad, r.e_ori, r.e_rel, r.e_total);
        out << buf;
    }
}

Trainer::Trainer(CaeModel& model, std::vector<TrainPair> data, TrainConfig cfg)
    : model_(model), data_(std::move(data)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    if (data_.empty()) throw std::invalid_argument("training dataset is empty");
    for (const TrainPair& p : data_) {
        if (p.latent.width != model_.in_w || p.latent.height != model_.in_h ||
            !p.latent.same_size(p.target))
            throw std::invalid_argument("training pair dimensions do not match the model input");
    }
    adam_ = make_adam_state(model_);
    // Target-side fields are input-independent; cache them when the dataset
    // is small enough that the memory cost is trivial.
    if (data_.size() <= 512) {
        caches_.reserve(data_.size());
        for (const TrainPair& p : data_) caches_.push_back(make_target_cache(p.target, cfg_.energy));
    }
}

void Trainer::restore(AdamState adam, const std::array<uint64_t, 4>& rng_state,
                      int64_t iters_done) {
    if (adam.m.size() != adam_.m.size())
        throw std::invalid_argument("restore: optimizer state does not match the model");
    adam_ = std::move(adam);
    rng_.set_state(rng_state);
    iters_done_ = iters_done;
}

std::vector<LossRow> Trainer::run(int64_t n_iters) {
    std::vector<LossRow> rows;
    rows.reserve(static_cast<size_t>(n_iters));
    for (int64_t i = 0; i < n_iters; ++i) rows.push_back(step());
    return rows;
}

LossRow Trainer::step() {
    const int b = cfg_.batch_size;
    const int h = model_.in_h, w = model_.in_w;

    // All random draws happen up front in a fixed order; the parallel part
    // below is draw-free.
    std::vector<int> idx(b);
    for (int i = 0; i < b; ++i) idx[i] = rng_.uniform_int(static_cast<int>(data_.size()));

    Tensor4 x(b, 1, h, w);
    for (int i = 0; i < b; ++i) {
        const GrayImage& latent = data_[idx[i]].latent;
        double* dst = &x.data[x.index(i, 0, 0, 0)];
        for (size_t p = 0; p < latent.size(); ++p)
            dst[p] = clamp01(latent.data[p] + rng_.normal(0.0, cfg_.noise_sigma));
    }

    ForwardTrace trace;
    const Tensor4 out = model_forward(model_, x, PassMode::Train, cfg_.threads, &trace);

    std::vector<EnergyReport> reports(b);
    parallel_for(0, b, cfg_.threads, [&](int i) {
        const GrayImage recon = tensor_to_image(out, i);
        if (!caches_.empty())
            reports[i] = total_energy(caches_[idx[i]], recon, cfg_.energy);
        else
            reports[i] = total_energy(data_[idx[i]].target, recon, cfg_.energy);
    });

    LossRow row;
    row.iter = iters_done_ + 1;
    Tensor4 grad_out(b, 1, h, w);
    const double inv_b = 1.0 / b;
    for (int i = 0; i < b; ++i) {
        row.e_grad += reports[i].e_grad * inv_b;
        row.e_ori += reports[i].e_ori * inv_b;
        row.e_rel += reports[i].e_rel * inv_b;
        row.e_total += reports[i].e_total * inv_b;
        double* dst = &grad_out.data[grad_out.index(i, 0, 0, 0)];
        const GrayImage& g = reports[i].grad_total;
        for (size_t p = 0; p < g.size(); ++p) dst[p] = g.data[p] * inv_b;
    }

    if (!std::isfinite(row.e_total)) {
        check_finite(model_, trace);  // throws naming the first bad layer
        throw std::runtime_error("non-finite loss with finite activations");
    }

    const std::vector<LayerGrads> grads = model_backward(model_, trace, grad_out, cfg_.threads);
    AdamConfig ac{cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.adam_eps, cfg_.weight_decay};
    adam_step(model_, grads, adam_, ac);
    ++iters_done_;
    return row;
}

}  // namespace ridgerec
