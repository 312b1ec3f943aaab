#include "ridgerec/e2e.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ridgerec/checkpoint.hpp"
#include "ridgerec/parallel.hpp"
#include "ridgerec/pgm.hpp"

namespace ridgerec {

E2eConfig E2eConfig::make_default() {
    E2eConfig cfg;
    cfg.bottleneck = 192;
    cfg.train.epochs = 15;
    cfg.train.iters_per_epoch = 64;
    cfg.train.batch_size = 12;
    // The 15-epoch desk budget is a small fraction of a full training run;
    // the step size compensates.
    cfg.train.lr = 1e-3;
    // Desk-scale degradation: heavy enough that raw minutiae matching
    // struggles, light enough that ridge structure stays recoverable. An
    // 11-px blur at this resolution would erase a full ridge period.
    // Rotation/translation are held at zero: each identity has a single
    // groundtruth, so the autoencoder's input must stay geometrically
    // aligned with it (a convolutional net cannot undo a per-sample global
    // warp); pose invariance is the matcher's job, exercised separately.
    cfg.degrade.rotation_min_deg = 0.0;
    cfg.degrade.rotation_max_deg = 0.0;
    cfg.degrade.translation_frac = 0.0;
    cfg.degrade.blur_len_min = 5;
    cfg.degrade.blur_len_max = 9;
    cfg.degrade.alpha_min = 0.55;
    cfg.degrade.alpha_max = 0.75;
    cfg.degrade.occlusion_frac_min = 0.06;
    cfg.degrade.occlusion_frac_max = 0.14;
    cfg.degrade.noise_sigma = 0.015;
    cfg.synth.ridge_period_min = 7.0;
    cfg.synth.ridge_period_max = 13.0;
    return cfg;
}

std::vector<Minutia> image_minutiae(const GrayImage& image, ProbeBinarize mode, double threshold,
                                    const EnergyParams& energy, int border_margin,
                                    int min_separation) {
    GrayImage binary;
    switch (mode) {
        case ProbeBinarize::Adaptive:
            binary = adaptive_binarize(image, 17, 0.02);
            break;
        case ProbeBinarize::DarkThreshold:
            binary = GrayImage(image.width, image.height);
            for (size_t i = 0; i < image.size(); ++i)
                binary.data[i] = image.data[i] <= threshold ? 1.0 : 0.0;
            break;
        case ProbeBinarize::BrightThreshold:
            binary = GrayImage(image.width, image.height);
            for (size_t i = 0; i < image.size(); ++i)
                binary.data[i] = image.data[i] >= threshold ? 1.0 : 0.0;
            break;
        case ProbeBinarize::None:
            binary = image;
            break;
    }
    const OrientationField orient = orientation_field(structure_tensor(binary, energy));
    return extract_minutiae(thin(binary), orient, border_margin, min_separation);
}

namespace {

ScoreMatrix score_all(const std::vector<std::vector<Minutia>>& probes,
                      const std::vector<int>& probe_labels,
                      const std::vector<std::vector<Minutia>>& gallery,
                      const std::vector<int>& gallery_labels, const MatchTolerances& tol,
                      int threads) {
    ScoreMatrix m;
    m.probe_labels = probe_labels;
    m.gallery_labels = gallery_labels;
    m.scores.assign(probes.size() * gallery.size(), 0.0);
    parallel_for(0, static_cast<int>(probes.size()), threads, [&](int p) {
        for (size_t g = 0; g < gallery.size(); ++g)
            m.at(p, g) = match_score(probes[p], gallery[g], tol);
    });
    return m;
}

}  // namespace

E2eSummary run_e2e(const E2eConfig& cfg) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);

    // Disjoint seed streams for the two datasets, the weights and the trainer.
    DatasetManifest train_set =
        make_dataset(cfg.train_identities, 1, cfg.out_dir + "/train", Rng::derive(cfg.seed, 1),
                     cfg.width, cfg.height, cfg.degrade, cfg.synth);
    DatasetManifest eval_set =
        make_dataset(cfg.eval_identities, cfg.eval_impressions, cfg.out_dir + "/eval",
                     Rng::derive(cfg.seed, 2), cfg.width, cfg.height, cfg.degrade, cfg.synth);

    std::vector<TrainPair> pairs;
    pairs.reserve(train_set.records.size());
    for (const SynthRecord& r : train_set.records) {
        TrainPair p;
        p.latent = load_pgm(resolve_path(train_set, r.latent));
        p.target = load_pgm(resolve_path(train_set, r.target));
        pairs.push_back(std::move(p));
    }

    CaeModel model = build_cae(cfg.height, cfg.width, cfg.stages, cfg.bottleneck, cfg.ksize);
    Rng init_rng(Rng::derive(cfg.seed, 3));
    init_params(model, init_rng);

    TrainConfig tc = cfg.train;
    tc.seed = Rng::derive(cfg.seed, 4);
    tc.threads = cfg.threads;
    const auto t_train0 = std::chrono::steady_clock::now();
    Trainer trainer(model, std::move(pairs), tc);
    const std::vector<LossRow> log = trainer.run(tc.total_iterations());
    const auto t_train1 = std::chrono::steady_clock::now();
    write_loss_csv(cfg.out_dir + "/loss.csv", log);

    Checkpoint ck;
    ck.model = model;
    ck.adam = trainer.adam();
    ck.rng_state = trainer.rng().state();
    ck.iterations_done = trainer.iterations_done();
    save_checkpoint(cfg.out_dir + "/model.rfck", ck);

    // Enhance every evaluation latent.
    fs::create_directories(cfg.out_dir + "/enhanced");
    const int n_probes = static_cast<int>(eval_set.records.size());
    std::vector<GrayImage> latents(n_probes), enhanced(n_probes);
    for (int i = 0; i < n_probes; ++i)
        latents[i] = load_pgm(resolve_path(eval_set, eval_set.records[i].latent));
    parallel_for(0, n_probes, cfg.threads, [&](int i) {
        enhanced[i] = reconstruct(model, latents[i], 1);
    });
    for (int i = 0; i < n_probes; ++i)
        save_pgm(enhanced[i], cfg.out_dir + "/enhanced/" + eval_set.records[i].latent);

    // Gallery: one binarized master (target) per identity.
    std::vector<int> gallery_labels;
    std::vector<GrayImage> gallery_targets;
    {
        int last_id = -1;
        for (const SynthRecord& r : eval_set.records) {
            if (r.id == last_id) continue;
            last_id = r.id;
            gallery_labels.push_back(r.id);
            gallery_targets.push_back(load_pgm(resolve_path(eval_set, r.target)));
        }
    }
    std::vector<std::vector<Minutia>> gallery_min(gallery_targets.size());
    parallel_for(0, static_cast<int>(gallery_targets.size()), cfg.threads, [&](int i) {
        gallery_min[i] =
            image_minutiae(gallery_targets[i], ProbeBinarize::DarkThreshold, 0.5,
                           cfg.train.energy, cfg.extract_border_margin,
                           cfg.extract_min_separation);
    });

    std::vector<int> probe_labels(n_probes);
    for (int i = 0; i < n_probes; ++i) probe_labels[i] = eval_set.records[i].id;
    std::vector<std::vector<Minutia>> raw_min(n_probes), enh_min(n_probes);
    parallel_for(0, n_probes, cfg.threads, [&](int i) {
        raw_min[i] = image_minutiae(latents[i], ProbeBinarize::Adaptive, 0.5, cfg.train.energy,
                                    cfg.extract_border_margin, cfg.extract_min_separation);
        enh_min[i] =
            image_minutiae(enhanced[i], ProbeBinarize::DarkThreshold, cfg.enhance_threshold,
                           cfg.train.energy, cfg.extract_border_margin,
                           cfg.extract_min_separation);
    });

    const ScoreMatrix scores_raw =
        score_all(raw_min, probe_labels, gallery_min, gallery_labels, cfg.match, cfg.threads);
    const ScoreMatrix scores_enh =
        score_all(enh_min, probe_labels, gallery_min, gallery_labels, cfg.match, cfg.threads);
    save_scores_csv(scores_raw, cfg.out_dir + "/scores_raw.csv");
    save_scores_csv(scores_enh, cfg.out_dir + "/scores_enhanced.csv");

    const CmcCurve cmc_raw = cmc_curve(scores_raw);
    const CmcCurve cmc_enh = cmc_curve(scores_enh);
    save_cmc_csv(cmc_raw, cfg.out_dir + "/cmc_raw.csv");
    save_cmc_csv(cmc_enh, cfg.out_dir + "/cmc_enhanced.csv");

    // Objective against the binarized target, before and after enhancement.
    std::vector<double> e_raw(n_probes), e_enh(n_probes);
    parallel_for(0, n_probes, cfg.threads, [&](int i) {
        const GrayImage target = load_pgm(resolve_path(eval_set, eval_set.records[i].target));
        const TargetCache cache = make_target_cache(target, cfg.train.energy);
        e_raw[i] = total_energy(cache, latents[i], cfg.train.energy).e_total;
        e_enh[i] = total_energy(cache, enhanced[i], cfg.train.energy).e_total;
    });

    E2eSummary s;
    s.rank1_raw = cmc_raw.accuracy.empty() ? 0.0 : cmc_raw.accuracy[0];
    s.rank1_enhanced = cmc_enh.accuracy.empty() ? 0.0 : cmc_enh.accuracy[0];
    s.cmc_raw = cmc_raw.accuracy;
    s.cmc_enhanced = cmc_enh.accuracy;
    for (int i = 0; i < n_probes; ++i) {
        s.mean_e_degraded += e_raw[i] / n_probes;
        s.mean_e_enhanced += e_enh[i] / n_probes;
    }
    s.train_seconds = std::chrono::duration<double>(t_train1 - t_train0).count();
    s.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json j;
    j["rank1_raw"] = s.rank1_raw;
    j["rank1_enhanced"] = s.rank1_enhanced;
    j["mean_e_degraded"] = s.mean_e_degraded;
    j["mean_e_enhanced"] = s.mean_e_enhanced;
    j["train_seconds"] = s.train_seconds;
    j["total_seconds"] = s.total_seconds;
    std::ofstream(cfg.out_dir + "/summary.json") << j.dump(2) << "\n";
    return s;
}

}  // namespace ridgerec
