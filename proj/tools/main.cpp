// ridgerec: command-line front end for synthetic ridge-pattern datasets,
// autoencoder training, enhancement, and identification evaluation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ridgerec/checkpoint.hpp"
#include "ridgerec/e2e.hpp"
#include "ridgerec/evalkit.hpp"
#include "ridgerec/parallel.hpp"
#include "ridgerec/pgm.hpp"
#include "ridgerec/synth.hpp"
#include "ridgerec/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ridgerec;

namespace {

// Strict JSON config: every key must name a registered option (unknown keys
// abort the run so a typo cannot silently fall back to a default), and a key
// only applies when the matching flag was not given — flags win over files.
class ConfigBinder {
public:
    template <typename T>
    void bind(const std::string& key, const std::string& flag, T* target) {
        entries_[key] = {flag, [target](const json& v) { *target = v.get<T>(); }};
    }

    void apply_file(const CLI::App* cmd, const std::string& path) const {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config '" + path + "'");
        json j;
        in >> j;
        if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            const auto it = entries_.find(key);
            if (it == entries_.end())
                throw std::runtime_error("unknown config key '" + key + "' in " + path);
            if (cmd->count(it->second.flag) > 0) continue;  // flag overrides file
            it->second.set(value);
        }
    }

private:
    struct Entry {
        std::string flag;
        std::function<void(const json&)> set;
    };
    std::map<std::string, Entry> entries_;
};

void write_resolved_config(const std::string& out_dir, const json& j) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir + "/resolved-config.json");
    if (!out) throw std::runtime_error("cannot write resolved-config.json in " + out_dir);
    out << j.dump(2) << "\n";
}

json degrade_json(const DegradeParams& p) {
    return json{{"rotation_min_deg", p.rotation_min_deg},
                {"rotation_max_deg", p.rotation_max_deg},
                {"translation_frac", p.translation_frac},
                {"blur_len_min", p.blur_len_min},
                {"blur_len_max", p.blur_len_max},
                {"blur_angle_min_deg", p.blur_angle_min_deg},
                {"blur_angle_max_deg", p.blur_angle_max_deg},
                {"dilate_radius_max", p.dilate_radius_max},
                {"alpha_min", p.alpha_min},
                {"alpha_max", p.alpha_max},
                {"occlusion_max", p.occlusion_max},
                {"occlusion_frac_min", p.occlusion_frac_min},
                {"occlusion_frac_max", p.occlusion_frac_max},
                {"noise_sigma", p.noise_sigma}};
}

json synth_json(const SynthParams& p) {
    return json{{"ridge_period_min", p.ridge_period_min},
                {"ridge_period_max", p.ridge_period_max},
                {"gabor_iterations", p.gabor_iterations},
                {"background_count", p.background_count},
                {"binarize_block", p.binarize_block},
                {"binarize_offset", p.binarize_offset}};
}

json energy_json(const EnergyParams& p) {
    return json{{"sigma_s", p.sigma_s},
                {"sigma_o", p.sigma_o},
                {"lambda", p.lambda},
                {"epsilon_r", p.epsilon_r},
                {"reduced_cross_inertia", p.reduced_cross_inertia},
                {"wrap_orientation_diff", p.wrap_orientation_diff}};
}

void bind_degrade(ConfigBinder& cfg, CLI::App* cmd, DegradeParams& p) {
    cfg.bind("rotation_min_deg", "--rotation-min", &p.rotation_min_deg);
    cfg.bind("rotation_max_deg", "--rotation-max", &p.rotation_max_deg);
    cfg.bind("translation_frac", "--translation-frac", &p.translation_frac);
    cfg.bind("blur_len_min", "--blur-min", &p.blur_len_min);
    cfg.bind("blur_len_max", "--blur-max", &p.blur_len_max);
    cfg.bind("blur_angle_min_deg", "--blur-angle-min", &p.blur_angle_min_deg);
    cfg.bind("blur_angle_max_deg", "--blur-angle-max", &p.blur_angle_max_deg);
    cfg.bind("dilate_radius_max", "--dilate-max", &p.dilate_radius_max);
    cfg.bind("alpha_min", "--alpha-min", &p.alpha_min);
    cfg.bind("alpha_max", "--alpha-max", &p.alpha_max);
    cfg.bind("occlusion_max", "--occlusions-max", &p.occlusion_max);
    cfg.bind("occlusion_frac_min", "--occlusion-frac-min", &p.occlusion_frac_min);
    cfg.bind("occlusion_frac_max", "--occlusion-frac-max", &p.occlusion_frac_max);
    cfg.bind("noise_sigma", "--noise-sigma", &p.noise_sigma);
    cmd->add_option("--rotation-min", p.rotation_min_deg, "Min rotation (deg)");
    cmd->add_option("--rotation-max", p.rotation_max_deg, "Max rotation (deg)");
    cmd->add_option("--translation-frac", p.translation_frac, "Max |translation| as dim fraction");
    cmd->add_option("--blur-min", p.blur_len_min, "Min motion blur length (px)");
    cmd->add_option("--blur-max", p.blur_len_max, "Max motion blur length (px)");
    cmd->add_option("--blur-angle-min", p.blur_angle_min_deg, "Min motion blur angle (deg)");
    cmd->add_option("--blur-angle-max", p.blur_angle_max_deg, "Max motion blur angle (deg)");
    cmd->add_option("--dilate-max", p.dilate_radius_max, "Max dilation radius (px)");
    cmd->add_option("--alpha-min", p.alpha_min, "Min background blend alpha");
    cmd->add_option("--alpha-max", p.alpha_max, "Max background blend alpha");
    cmd->add_option("--occlusions-max", p.occlusion_max, "Max occlusion rectangles");
    cmd->add_option("--occlusion-frac-min", p.occlusion_frac_min, "Min occlusion area fraction");
    cmd->add_option("--occlusion-frac-max", p.occlusion_frac_max, "Max occlusion area fraction");
    cmd->add_option("--noise-sigma", p.noise_sigma, "Additive Gaussian noise sigma");
}

void bind_synth(ConfigBinder& cfg, CLI::App* cmd, SynthParams& p) {
    cfg.bind("ridge_period_min", "--period-min", &p.ridge_period_min);
    cfg.bind("ridge_period_max", "--period-max", &p.ridge_period_max);
    cfg.bind("gabor_iterations", "--gabor-iterations", &p.gabor_iterations);
    cfg.bind("background_count", "--backgrounds", &p.background_count);
    cfg.bind("binarize_block", "--binarize-block", &p.binarize_block);
    cfg.bind("binarize_offset", "--binarize-offset", &p.binarize_offset);
    cmd->add_option("--period-min", p.ridge_period_min, "Min ridge period (px)");
    cmd->add_option("--period-max", p.ridge_period_max, "Max ridge period (px)");
    cmd->add_option("--gabor-iterations", p.gabor_iterations, "Filter iterations per master");
    cmd->add_option("--backgrounds", p.background_count, "Procedural background count");
    cmd->add_option("--binarize-block", p.binarize_block, "Adaptive threshold block (odd px)");
    cmd->add_option("--binarize-offset", p.binarize_offset, "Adaptive threshold offset");
}

void bind_energy(ConfigBinder& cfg, CLI::App* cmd, EnergyParams& p) {
    cfg.bind("sigma_s", "--sigma-s", &p.sigma_s);
    cfg.bind("sigma_o", "--sigma-o", &p.sigma_o);
    cfg.bind("lambda", "--lambda", &p.lambda);
    cfg.bind("epsilon_r", "--epsilon-r", &p.epsilon_r);
    cfg.bind("reduced_cross_inertia", "--reduced-cross-inertia", &p.reduced_cross_inertia);
    cfg.bind("wrap_orientation_diff", "--no-wrap-orientation", &p.wrap_orientation_diff);
    cmd->add_option("--sigma-s", p.sigma_s, "Structure tensor smoothing sigma (px)");
    cmd->add_option("--sigma-o", p.sigma_o, "Orientation field smoothing sigma (px)");
    cmd->add_option("--lambda", p.lambda, "Orientation/reliability weight");
    cmd->add_option("--epsilon-r", p.epsilon_r, "Reliability guard");
    cmd->add_flag("--reduced-cross-inertia", p.reduced_cross_inertia,
                  "Weight the cross inertia term by 1 instead of 2");
    cmd->add_flag("!--no-wrap-orientation", p.wrap_orientation_diff,
                  "Penalize raw angle differences instead of wrapped ones");
}

std::vector<Minutia> minutiae_for(const GrayImage& img, const std::string& mode, double threshold,
                                  const EnergyParams& energy, int margin, int min_sep) {
    ProbeBinarize pb;
    if (mode == "adaptive") pb = ProbeBinarize::Adaptive;
    else if (mode == "dark") pb = ProbeBinarize::DarkThreshold;
    else if (mode == "bright") pb = ProbeBinarize::BrightThreshold;
    else if (mode == "none") pb = ProbeBinarize::None;
    else throw std::runtime_error("unknown binarize mode '" + mode + "'");
    return image_minutiae(img, pb, threshold, energy, margin, min_sep);
}

struct SynthArgs {
    std::string config, out = "dataset";
    uint64_t seed = 42;
    int identities = 8, impressions = 2, width = 64, height = 80;
    DegradeParams degrade;
    SynthParams synthp;
};

struct DegradeArgs {
    std::string config, input, out = "degrade-out";
    uint64_t seed = 42;
    int backgrounds = 8;
    DegradeParams degrade;
};

struct TrainArgs {
    std::string config, manifest, out = "train-out", resume;
    uint64_t seed = 42;
    int threads = 0, stages = 4, bottleneck = 128, kernel = 4;
    int checkpoint_every = 0, max_pairs = 0;
    TrainConfig tc;
};

struct EnhanceArgs {
    std::string config, checkpoint, input, output, manifest, out = "enhanced";
    int threads = 0;
};

struct EnergyArgs {
    std::string config, target, recon, out;
    EnergyParams params;
};

struct MatchArgs {
    std::string config, gallery, probes, out = "match-out";
    std::string gallery_field = "target", probes_field = "latent";
    std::string gallery_binarize = "dark", probes_binarize = "adaptive";
    double threshold = 0.5;
    int margin = 4, min_sep = 4, threads = 0;
    double tol_dist = 12.0, tol_angle_deg = 20.0;
    EnergyParams energy;
    bool dump_minutiae = false;
};

struct CmcArgs {
    std::string config, scores, out = "cmc-out";
};

void run_synth(const SynthArgs& a) {
    make_dataset(a.identities, a.impressions, a.out, a.seed, a.width, a.height, a.degrade,
                 a.synthp);
    json j{{"subcommand", "synth"},
           {"out", a.out},
           {"seed", a.seed},
           {"identities", a.identities},
           {"impressions", a.impressions},
           {"width", a.width},
           {"height", a.height},
           {"degrade", degrade_json(a.degrade)},
           {"synth", synth_json(a.synthp)}};
    write_resolved_config(a.out, j);
    std::printf("wrote %s/manifest.jsonl\n", a.out.c_str());
}

void run_degrade(const DegradeArgs& a) {
    const GrayImage master = load_pgm(a.input);
    const auto bgs = procedural_backgrounds(master.width, master.height, a.backgrounds,
                                            Rng::derive(a.seed, 0xb9));
    const DegradeResult res = degrade(master, a.degrade, bgs, a.seed);
    fs::create_directories(a.out);
    save_pgm(res.latent, a.out + "/latent.pgm");
    json drawn{{"rotation_deg", res.drawn.rotation_deg},
               {"dx", res.drawn.dx},
               {"dy", res.drawn.dy},
               {"blur_len", res.drawn.blur_len},
               {"blur_angle_deg", res.drawn.blur_angle_deg},
               {"dilate_radius", res.drawn.dilate_radius},
               {"alpha", res.drawn.alpha},
               {"background_index", res.drawn.background_index},
               {"occlusions", res.drawn.occlusions},
               {"noise_sigma", res.drawn.noise_sigma}};
    std::ofstream(a.out + "/drawn.json") << drawn.dump(2) << "\n";
    json j{{"subcommand", "degrade"}, {"input", a.input}, {"out", a.out},
           {"seed", a.seed},          {"backgrounds", a.backgrounds},
           {"degrade", degrade_json(a.degrade)}};
    write_resolved_config(a.out, j);
    std::printf("wrote %s/latent.pgm\n", a.out.c_str());
}

void run_train(TrainArgs& a) {
    const DatasetManifest manifest = load_manifest(a.manifest);
    std::vector<TrainPair> pairs;
    for (const SynthRecord& r : manifest.records) {
        if (a.max_pairs > 0 && static_cast<int>(pairs.size()) >= a.max_pairs) break;
        pairs.push_back(TrainPair{load_pgm(resolve_path(manifest, r.latent)),
                                  load_pgm(resolve_path(manifest, r.target))});
    }
    if (pairs.empty()) throw std::runtime_error("manifest has no records");

    a.tc.seed = a.seed;
    a.tc.threads = a.threads;

    CaeModel model;
    AdamState adam;
    std::array<uint64_t, 4> rng_state{};
    int64_t done = 0;
    bool restored = false;
    if (!a.resume.empty()) {
        Checkpoint ck = load_checkpoint(a.resume);
        model = std::move(ck.model);
        adam = std::move(ck.adam);
        rng_state = ck.rng_state;
        done = ck.iterations_done;
        restored = true;
    } else {
        model = build_cae(pairs[0].latent.height, pairs[0].latent.width, a.stages, a.bottleneck,
                          a.kernel);
        Rng ir(Rng::derive(a.seed, 0x11));
        init_params(model, ir);
    }

    Trainer trainer(model, std::move(pairs), a.tc);
    if (restored) trainer.restore(std::move(adam), rng_state, done);

    fs::create_directories(a.out);
    auto save_ck = [&](const std::string& path) {
        Checkpoint ck;
        ck.model = model;
        ck.adam = trainer.adam();
        ck.rng_state = trainer.rng().state();
        ck.iterations_done = trainer.iterations_done();
        save_checkpoint(path, ck);
    };

    std::vector<LossRow> log;
    const int64_t total = a.tc.total_iterations();
    while (trainer.iterations_done() < total) {
        const auto rows = trainer.run(
            std::min<int64_t>(a.tc.iters_per_epoch, total - trainer.iterations_done()));
        log.insert(log.end(), rows.begin(), rows.end());
        const int64_t epoch = trainer.iterations_done() / a.tc.iters_per_epoch;
        if (a.checkpoint_every > 0 && epoch % a.checkpoint_every == 0)
            save_ck(a.out + "/epoch_" + std::to_string(epoch) + ".rfck");
        std::fprintf(stderr, "epoch %lld/%d e_total %.5f\n", static_cast<long long>(epoch),
                     a.tc.epochs, log.empty() ? 0.0 : log.back().e_total);
    }
    write_loss_csv(a.out + "/loss.csv", log);
    save_ck(a.out + "/model.rfck");

    json j{{"subcommand", "train"},
           {"manifest", a.manifest},
           {"out", a.out},
           {"seed", a.seed},
           {"threads", a.threads},
           {"stages", a.stages},
           {"bottleneck", a.bottleneck},
           {"kernel", a.kernel},
           {"epochs", a.tc.epochs},
           {"iters_per_epoch", a.tc.iters_per_epoch},
           {"batch_size", a.tc.batch_size},
           {"lr", a.tc.lr},
           {"beta1", a.tc.beta1},
           {"beta2", a.tc.beta2},
           {"adam_eps", a.tc.adam_eps},
           {"weight_decay", a.tc.weight_decay},
           {"train_noise_sigma", a.tc.noise_sigma},
           {"checkpoint_every", a.checkpoint_every},
           {"max_pairs", a.max_pairs},
           {"resume", a.resume},
           {"energy", energy_json(a.tc.energy)}};
    write_resolved_config(a.out, j);
    std::printf("wrote %s/model.rfck and %s/loss.csv\n", a.out.c_str(), a.out.c_str());
}

void run_enhance(const EnhanceArgs& a) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    if (!a.input.empty()) {
        if (a.output.empty()) throw std::runtime_error("--input requires --output");
        save_pgm(reconstruct(ck.model, load_pgm(a.input), a.threads), a.output);
        std::printf("wrote %s\n", a.output.c_str());
        return;
    }
    if (a.manifest.empty()) throw std::runtime_error("need --input/--output or --manifest");
    const DatasetManifest manifest = load_manifest(a.manifest);
    fs::create_directories(a.out);
    DatasetManifest out_manifest = manifest;
    out_manifest.dir = a.out;
    const int n = static_cast<int>(manifest.records.size());
    std::vector<GrayImage> inputs(n), results(n);
    for (int i = 0; i < n; ++i)
        inputs[i] = load_pgm(resolve_path(manifest, manifest.records[i].latent));
    parallel_for(0, n, a.threads, [&](int i) { results[i] = reconstruct(ck.model, inputs[i], 1); });
    for (int i = 0; i < n; ++i) {
        save_pgm(results[i], a.out + "/" + manifest.records[i].latent);
        out_manifest.records[i].master =
            fs::absolute(resolve_path(manifest, manifest.records[i].master)).string();
        out_manifest.records[i].target =
            fs::absolute(resolve_path(manifest, manifest.records[i].target)).string();
    }
    save_manifest(out_manifest, a.out + "/manifest.jsonl");
    json j{{"subcommand", "enhance"},
           {"checkpoint", a.checkpoint},
           {"manifest", a.manifest},
           {"out", a.out},
           {"threads", a.threads}};
    write_resolved_config(a.out, j);
    std::printf("wrote %d enhanced images to %s\n", n, a.out.c_str());
}

void run_energy(const EnergyArgs& a) {
    const EnergyReport rep = total_energy(load_pgm(a.target), load_pgm(a.recon), a.params);
    char row[256];
    std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g,%.17g,%d\n", rep.e_grad, rep.e_ori,
                  rep.e_rel, rep.e_total, rep.n);
    std::printf("e_grad,e_ori,e_rel,e_total,n\n%s", row);
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::ofstream csv(a.out + "/energy.csv");
        csv << "e_grad,e_ori,e_rel,e_total,n\n" << row;
        json j{{"subcommand", "energy"},
               {"target", a.target},
               {"recon", a.recon},
               {"out", a.out},
               {"energy", energy_json(a.params)}};
        write_resolved_config(a.out, j);
    }
}

void run_match(const MatchArgs& a) {
    auto field_of = [](const SynthRecord& r, const std::string& f) -> const std::string& {
        if (f == "master") return r.master;
        if (f == "target") return r.target;
        if (f == "latent") return r.latent;
        throw std::runtime_error("unknown manifest field '" + f + "'");
    };
    const DatasetManifest gal = load_manifest(a.gallery);
    const DatasetManifest prb = load_manifest(a.probes);
    if (gal.records.empty() || prb.records.empty())
        throw std::runtime_error("empty manifest");

    // Gallery keeps one entry per distinct identity (first occurrence).
    std::vector<int> gal_labels;
    std::vector<GrayImage> gal_images;
    int last_id = INT32_MIN;
    for (const SynthRecord& r : gal.records) {
        if (r.id == last_id) continue;
        last_id = r.id;
        gal_labels.push_back(r.id);
        gal_images.push_back(load_pgm(resolve_path(gal, field_of(r, a.gallery_field))));
    }
    std::vector<int> prb_labels;
    std::vector<GrayImage> prb_images;
    for (const SynthRecord& r : prb.records) {
        prb_labels.push_back(r.id);
        prb_images.push_back(load_pgm(resolve_path(prb, field_of(r, a.probes_field))));
    }

    std::vector<std::vector<Minutia>> gal_min(gal_images.size()), prb_min(prb_images.size());
    parallel_for(0, static_cast<int>(gal_images.size()), a.threads, [&](int i) {
        gal_min[i] = minutiae_for(gal_images[i], a.gallery_binarize, a.threshold, a.energy,
                                  a.margin, a.min_sep);
    });
    parallel_for(0, static_cast<int>(prb_images.size()), a.threads, [&](int i) {
        prb_min[i] = minutiae_for(prb_images[i], a.probes_binarize, a.threshold, a.energy,
                                  a.margin, a.min_sep);
    });

    MatchTolerances tol;
    tol.distance_px = a.tol_dist;
    tol.angle_rad = a.tol_angle_deg * M_PI / 180.0;
    ScoreMatrix scores;
    scores.probe_labels = prb_labels;
    scores.gallery_labels = gal_labels;
    scores.scores.assign(prb_labels.size() * gal_labels.size(), 0.0);
    parallel_for(0, static_cast<int>(prb_labels.size()), a.threads, [&](int p) {
        for (size_t g = 0; g < gal_labels.size(); ++g)
            scores.at(p, g) = match_score(prb_min[p], gal_min[g], tol);
    });

    fs::create_directories(a.out);
    save_scores_csv(scores, a.out + "/scores.csv");
    if (a.dump_minutiae) {
        fs::create_directories(a.out + "/minutiae");
        for (size_t i = 0; i < gal_min.size(); ++i)
            save_minutiae_csv(gal_min[i], a.out + "/minutiae/gallery_" + std::to_string(i) + ".csv");
        for (size_t i = 0; i < prb_min.size(); ++i)
            save_minutiae_csv(prb_min[i], a.out + "/minutiae/probe_" + std::to_string(i) + ".csv");
    }
    json j{{"subcommand", "match"},
           {"gallery", a.gallery},
           {"probes", a.probes},
           {"out", a.out},
           {"gallery_field", a.gallery_field},
           {"probes_field", a.probes_field},
           {"gallery_binarize", a.gallery_binarize},
           {"probes_binarize", a.probes_binarize},
           {"threshold", a.threshold},
           {"margin", a.margin},
           {"min_sep", a.min_sep},
           {"tol_dist", a.tol_dist},
           {"tol_angle_deg", a.tol_angle_deg},
           {"dump_minutiae", a.dump_minutiae},
           {"energy", energy_json(a.energy)}};
    write_resolved_config(a.out, j);
    std::printf("wrote %s/scores.csv (%zu x %zu)\n", a.out.c_str(), prb_labels.size(),
                gal_labels.size());
}

void run_cmc(const CmcArgs& a) {
    const ScoreMatrix scores = load_scores_csv(a.scores);
    const CmcCurve curve = cmc_curve(scores);
    fs::create_directories(a.out);
    save_cmc_csv(curve, a.out + "/cmc.csv");
    auto at = [&](size_t k) { return k <= curve.accuracy.size() ? curve.accuracy[k - 1] : 1.0; };
    std::printf("rank-1 %.4f, rank-5 %.4f, rank-10 %.4f\n", at(1), at(5), at(10));
    json j{{"subcommand", "cmc"}, {"scores", a.scores}, {"out", a.out}};
    write_resolved_config(a.out, j);
}

void run_e2e_cmd(const E2eConfig& cfg) {
    json j{{"subcommand", "e2e"},
           {"out", cfg.out_dir},
           {"seed", cfg.seed},
           {"threads", cfg.threads},
           {"width", cfg.width},
           {"height", cfg.height},
           {"eval_identities", cfg.eval_identities},
           {"eval_impressions", cfg.eval_impressions},
           {"train_identities", cfg.train_identities},
           {"stages", cfg.stages},
           {"bottleneck", cfg.bottleneck},
           {"epochs", cfg.train.epochs},
           {"iters_per_epoch", cfg.train.iters_per_epoch},
           {"batch_size", cfg.train.batch_size}};
    write_resolved_config(cfg.out_dir, j);
    const E2eSummary s = run_e2e(cfg);
    std::printf("rank-1 raw %.4f -> enhanced %.4f (gap %+.1f pts)\n", s.rank1_raw,
                s.rank1_enhanced, 100.0 * (s.rank1_enhanced - s.rank1_raw));
    std::printf("mean objective: degraded %.5f -> enhanced %.5f\n", s.mean_e_degraded,
                s.mean_e_enhanced);
    std::printf("see %s/cmc_raw.csv and %s/cmc_enhanced.csv\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
}

int run_cli(int argc, char** argv) {
    CLI::App app{"ridge pattern reconstruction toolkit"};
    app.require_subcommand(1);

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    SynthArgs sy;
    auto sy_cfg = std::make_shared<ConfigBinder>();
    sy_cfg->bind("out", "--out", &sy.out);
    sy_cfg->bind("seed", "--seed", &sy.seed);
    sy_cfg->bind("identities", "--identities", &sy.identities);
    sy_cfg->bind("impressions", "--impressions", &sy.impressions);
    sy_cfg->bind("width", "--width", &sy.width);
    sy_cfg->bind("height", "--height", &sy.height);
    synth_cmd->add_option("--config", sy.config, "JSON config file");
    synth_cmd->add_option("--out", sy.out, "Output directory");
    synth_cmd->add_option("--seed", sy.seed, "Random seed");
    synth_cmd->add_option("--identities", sy.identities, "Number of identities");
    synth_cmd->add_option("--impressions", sy.impressions, "Degraded impressions per identity");
    synth_cmd->add_option("--width", sy.width, "Image width (px)");
    synth_cmd->add_option("--height", sy.height, "Image height (px)");
    bind_degrade(*sy_cfg, synth_cmd, sy.degrade);
    bind_synth(*sy_cfg, synth_cmd, sy.synthp);
    synth_cmd->callback([&sy, sy_cfg, synth_cmd] {
        if (!sy.config.empty()) sy_cfg->apply_file(synth_cmd, sy.config);
        run_synth(sy);
    });

    auto* degrade_cmd = app.add_subcommand("degrade", "Degrade one master image (preview)");
    DegradeArgs dg;
    auto dg_cfg = std::make_shared<ConfigBinder>();
    dg_cfg->bind("input", "--input", &dg.input);
    dg_cfg->bind("out", "--out", &dg.out);
    dg_cfg->bind("seed", "--seed", &dg.seed);
    dg_cfg->bind("backgrounds", "--backgrounds", &dg.backgrounds);
    degrade_cmd->add_option("--config", dg.config, "JSON config file");
    degrade_cmd->add_option("--input", dg.input, "Master PGM")->required();
    degrade_cmd->add_option("--out", dg.out, "Output directory");
    degrade_cmd->add_option("--seed", dg.seed, "Random seed");
    degrade_cmd->add_option("--backgrounds", dg.backgrounds, "Procedural background count");
    bind_degrade(*dg_cfg, degrade_cmd, dg.degrade);
    degrade_cmd->callback([&dg, dg_cfg, degrade_cmd] {
        if (!dg.config.empty()) dg_cfg->apply_file(degrade_cmd, dg.config);
        run_degrade(dg);
    });

    auto* train_cmd = app.add_subcommand("train", "Train the autoencoder on a dataset manifest");
    TrainArgs tn;
    auto tn_cfg = std::make_shared<ConfigBinder>();
    tn_cfg->bind("manifest", "--manifest", &tn.manifest);
    tn_cfg->bind("out", "--out", &tn.out);
    tn_cfg->bind("seed", "--seed", &tn.seed);
    tn_cfg->bind("threads", "--threads", &tn.threads);
    tn_cfg->bind("stages", "--stages", &tn.stages);
    tn_cfg->bind("bottleneck", "--bottleneck", &tn.bottleneck);
    tn_cfg->bind("kernel", "--kernel", &tn.kernel);
    tn_cfg->bind("checkpoint_every", "--checkpoint-every", &tn.checkpoint_every);
    tn_cfg->bind("max_pairs", "--max-pairs", &tn.max_pairs);
    tn_cfg->bind("lr", "--lr", &tn.tc.lr);
    tn_cfg->bind("beta1", "--beta1", &tn.tc.beta1);
    tn_cfg->bind("beta2", "--beta2", &tn.tc.beta2);
    tn_cfg->bind("adam_eps", "--adam-eps", &tn.tc.adam_eps);
    tn_cfg->bind("weight_decay", "--weight-decay", &tn.tc.weight_decay);
    tn_cfg->bind("batch_size", "--batch", &tn.tc.batch_size);
    tn_cfg->bind("epochs", "--epochs", &tn.tc.epochs);
    tn_cfg->bind("iters_per_epoch", "--iters-per-epoch", &tn.tc.iters_per_epoch);
    tn_cfg->bind("train_noise_sigma", "--train-noise-sigma", &tn.tc.noise_sigma);
    train_cmd->add_option("--config", tn.config, "JSON config file");
    train_cmd->add_option("--manifest", tn.manifest, "Dataset manifest")->required();
    train_cmd->add_option("--out", tn.out, "Output directory");
    train_cmd->add_option("--seed", tn.seed, "Random seed");
    train_cmd->add_option("--threads", tn.threads, "Worker thread cap (0 = auto)");
    train_cmd->add_option("--stages", tn.stages, "Encoder stages");
    train_cmd->add_option("--bottleneck", tn.bottleneck, "Bottleneck channels");
    train_cmd->add_option("--kernel", tn.kernel, "Strided conv kernel size");
    train_cmd->add_option("--epochs", tn.tc.epochs, "Training epochs");
    train_cmd->add_option("--iters-per-epoch", tn.tc.iters_per_epoch, "Iterations per epoch");
    train_cmd->add_option("--batch", tn.tc.batch_size, "Batch size");
    train_cmd->add_option("--lr", tn.tc.lr, "Learning rate");
    train_cmd->add_option("--beta1", tn.tc.beta1, "Adam beta1");
    train_cmd->add_option("--beta2", tn.tc.beta2, "Adam beta2");
    train_cmd->add_option("--adam-eps", tn.tc.adam_eps, "Adam epsilon");
    train_cmd->add_option("--weight-decay", tn.tc.weight_decay, "L2 weight decay");
    train_cmd->add_option("--train-noise-sigma", tn.tc.noise_sigma,
                          "Input augmentation noise sigma");
    train_cmd->add_option("--checkpoint-every", tn.checkpoint_every,
                          "Also checkpoint every N epochs (0 = final only)");
    train_cmd->add_option("--max-pairs", tn.max_pairs, "Use at most N pairs (0 = all)");
    train_cmd->add_option("--resume", tn.resume, "Checkpoint to resume from");
    bind_energy(*tn_cfg, train_cmd, tn.tc.energy);
    train_cmd->callback([&tn, tn_cfg, train_cmd] {
        if (!tn.config.empty()) tn_cfg->apply_file(train_cmd, tn.config);
        run_train(tn);
    });

    auto* enhance_cmd =
        app.add_subcommand("enhance", "Reconstruct ridge patterns with a trained model");
    EnhanceArgs en;
    auto en_cfg = std::make_shared<ConfigBinder>();
    en_cfg->bind("checkpoint", "--checkpoint", &en.checkpoint);
    en_cfg->bind("input", "--input", &en.input);
    en_cfg->bind("output", "--output", &en.output);
    en_cfg->bind("manifest", "--manifest", &en.manifest);
    en_cfg->bind("out", "--out", &en.out);
    en_cfg->bind("threads", "--threads", &en.threads);
    enhance_cmd->add_option("--config", en.config, "JSON config file");
    enhance_cmd->add_option("--checkpoint", en.checkpoint, "Model checkpoint")->required();
    enhance_cmd->add_option("--input", en.input, "Single input PGM");
    enhance_cmd->add_option("--output", en.output, "Single output PGM");
    enhance_cmd->add_option("--manifest", en.manifest, "Enhance all latents of a manifest");
    enhance_cmd->add_option("--out", en.out, "Output directory (manifest mode)");
    enhance_cmd->add_option("--threads", en.threads, "Worker thread cap (0 = auto)");
    enhance_cmd->callback([&en, en_cfg, enhance_cmd] {
        if (!en.config.empty()) en_cfg->apply_file(enhance_cmd, en.config);
        run_enhance(en);
    });

    auto* energy_cmd =
        app.add_subcommand("energy", "Objective value for a target/reconstruction pair");
    EnergyArgs eg;
    auto eg_cfg = std::make_shared<ConfigBinder>();
    eg_cfg->bind("target", "--target", &eg.target);
    eg_cfg->bind("recon", "--recon", &eg.recon);
    eg_cfg->bind("out", "--out", &eg.out);
    energy_cmd->add_option("--config", eg.config, "JSON config file");
    energy_cmd->add_option("--target", eg.target, "Target PGM")->required();
    energy_cmd->add_option("--recon", eg.recon, "Reconstruction PGM")->required();
    energy_cmd->add_option("--out", eg.out, "Optional output directory");
    bind_energy(*eg_cfg, energy_cmd, eg.params);
    energy_cmd->callback([&eg, eg_cfg, energy_cmd] {
        if (!eg.config.empty()) eg_cfg->apply_file(energy_cmd, eg.config);
        run_energy(eg);
    });

    auto* match_cmd = app.add_subcommand("match", "Score probe images against a gallery");
    MatchArgs mt;
    auto mt_cfg = std::make_shared<ConfigBinder>();
    mt_cfg->bind("gallery", "--gallery", &mt.gallery);
    mt_cfg->bind("probes", "--probes", &mt.probes);
    mt_cfg->bind("out", "--out", &mt.out);
    mt_cfg->bind("gallery_field", "--gallery-field", &mt.gallery_field);
    mt_cfg->bind("probes_field", "--probes-field", &mt.probes_field);
    mt_cfg->bind("gallery_binarize", "--gallery-binarize", &mt.gallery_binarize);
    mt_cfg->bind("probes_binarize", "--probes-binarize", &mt.probes_binarize);
    mt_cfg->bind("threshold", "--threshold", &mt.threshold);
    mt_cfg->bind("margin", "--margin", &mt.margin);
    mt_cfg->bind("min_sep", "--min-sep", &mt.min_sep);
    mt_cfg->bind("threads", "--threads", &mt.threads);
    mt_cfg->bind("tol_dist", "--tol-dist", &mt.tol_dist);
    mt_cfg->bind("tol_angle_deg", "--tol-angle", &mt.tol_angle_deg);
    mt_cfg->bind("dump_minutiae", "--dump-minutiae", &mt.dump_minutiae);
    match_cmd->add_option("--config", mt.config, "JSON config file");
    match_cmd->add_option("--gallery", mt.gallery, "Gallery manifest")->required();
    match_cmd->add_option("--probes", mt.probes, "Probe manifest")->required();
    match_cmd->add_option("--out", mt.out, "Output directory");
    match_cmd->add_option("--gallery-field", mt.gallery_field,
                          "Manifest image field for the gallery (master|target|latent)");
    match_cmd->add_option("--probes-field", mt.probes_field, "Manifest image field for probes");
    match_cmd->add_option("--gallery-binarize", mt.gallery_binarize, "adaptive|dark|bright|none");
    match_cmd->add_option("--probes-binarize", mt.probes_binarize, "adaptive|dark|bright|none");
    match_cmd->add_option("--threshold", mt.threshold, "Threshold for dark/bright modes");
    match_cmd->add_option("--margin", mt.margin, "Minutia border margin (px)");
    match_cmd->add_option("--min-sep", mt.min_sep, "Minutia merge distance (px)");
    match_cmd->add_option("--threads", mt.threads, "Worker thread cap (0 = auto)");
    match_cmd->add_option("--tol-dist", mt.tol_dist, "Match distance tolerance (px)");
    match_cmd->add_option("--tol-angle", mt.tol_angle_deg, "Match angle tolerance (deg)");
    match_cmd->add_flag("--dump-minutiae", mt.dump_minutiae, "Write per-image minutiae CSVs");
    match_cmd->callback([&mt, mt_cfg, match_cmd] {
        if (!mt.config.empty()) mt_cfg->apply_file(match_cmd, mt.config);
        run_match(mt);
    });

    auto* cmc_cmd = app.add_subcommand("cmc", "Cumulative match characteristic from a score CSV");
    CmcArgs cm;
    auto cm_cfg = std::make_shared<ConfigBinder>();
    cm_cfg->bind("scores", "--scores", &cm.scores);
    cm_cfg->bind("out", "--out", &cm.out);
    cmc_cmd->add_option("--config", cm.config, "JSON config file");
    cmc_cmd->add_option("--scores", cm.scores, "Score matrix CSV")->required();
    cmc_cmd->add_option("--out", cm.out, "Output directory");
    cmc_cmd->callback([&cm, cm_cfg, cmc_cmd] {
        if (!cm.config.empty()) cm_cfg->apply_file(cmc_cmd, cm.config);
        run_cmc(cm);
    });

    auto* e2e_cmd = app.add_subcommand("e2e", "Full synthesize/train/enhance/match experiment");
    E2eConfig e2 = E2eConfig::make_default();
    std::string e2_config;
    auto e2_cfg = std::make_shared<ConfigBinder>();
    e2_cfg->bind("out", "--out", &e2.out_dir);
    e2_cfg->bind("seed", "--seed", &e2.seed);
    e2_cfg->bind("threads", "--threads", &e2.threads);
    e2_cfg->bind("width", "--width", &e2.width);
    e2_cfg->bind("height", "--height", &e2.height);
    e2_cfg->bind("eval_identities", "--eval-identities", &e2.eval_identities);
    e2_cfg->bind("eval_impressions", "--eval-impressions", &e2.eval_impressions);
    e2_cfg->bind("train_identities", "--train-pairs", &e2.train_identities);
    e2_cfg->bind("stages", "--stages", &e2.stages);
    e2_cfg->bind("bottleneck", "--bottleneck", &e2.bottleneck);
    e2_cfg->bind("epochs", "--epochs", &e2.train.epochs);
    e2_cfg->bind("iters_per_epoch", "--iters-per-epoch", &e2.train.iters_per_epoch);
    e2_cfg->bind("batch_size", "--batch", &e2.train.batch_size);
    e2e_cmd->add_option("--config", e2_config, "JSON config file");
    e2e_cmd->add_option("--out", e2.out_dir, "Output directory");
    e2e_cmd->add_option("--seed", e2.seed, "Random seed");
    e2e_cmd->add_option("--threads", e2.threads, "Worker thread cap (0 = auto)");
    e2e_cmd->add_option("--eval-identities", e2.eval_identities, "Gallery identities");
    e2e_cmd->add_option("--eval-impressions", e2.eval_impressions, "Probes per identity");
    e2e_cmd->add_option("--train-pairs", e2.train_identities, "Training identities");
    e2e_cmd->add_option("--stages", e2.stages, "Encoder stages");
    e2e_cmd->add_option("--bottleneck", e2.bottleneck, "Bottleneck channels");
    e2e_cmd->add_option("--epochs", e2.train.epochs, "Training epochs");
    e2e_cmd->add_option("--width", e2.width, "Image width (px)");
    e2e_cmd->add_option("--height", e2.height, "Image height (px)");
    e2e_cmd->callback([&e2, &e2_config, e2_cfg, e2e_cmd] {
        if (!e2_config.empty()) e2_cfg->apply_file(e2e_cmd, e2_config);
        run_e2e_cmd(e2);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage line and the offending flag
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
