#include "ridgerec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ridgerec/pgm.hpp"
#include "ridgerec/rng.hpp"

namespace ridgerec {

using nlohmann::json;

void SingularityModel::validate(int width, int height) const {
    if (loops.size() > 2 || deltas.size() > 2)
        throw std::invalid_argument("at most 2 loops and 2 deltas");
    for (const auto& [x, y] : loops)
        if (x < 0 || x >= width || y < 0 || y >= height)
            throw std::invalid_argument("loop point out of bounds");
    for (const auto& [x, y] : deltas)
        if (x < 0 || x >= width || y < 0 || y >= height)
            throw std::invalid_argument("delta point out of bounds");
}

OrientationField orientation_model(const SingularityModel& model, int width, int height) {
    model.validate(width, height);
    OrientationField f;
    f.width = width;
    f.height = height;
    f.theta.resize(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double a = model.base_angle;
            bool singular = false;
            for (const auto& [lx, ly] : model.loops) {
                if (x == lx && y == ly) { singular = true; break; }
                a += 0.5 * std::atan2(y - ly, x - lx);
            }
            if (!singular) {
                for (const auto& [dx_, dy_] : model.deltas) {
                    if (x == dx_ && y == dy_) { singular = true; break; }
                    a -= 0.5 * std::atan2(y - dy_, x - dx_);
                }
            }
            f.theta[static_cast<size_t>(y) * width + x] =
                fold_orientation(singular ? model.base_angle : a);
        }
    }
    return f;
}

namespace {

// Oriented Gabor bank quantized over (-pi/2, pi/2]. theta is the ridge
// tangent; the carrier wave runs along the normal.
struct GaborBank {
    int bins = 36;
    int r = 0;
    std::vector<std::vector<double>> taps;  // per bin, (2r+1)^2

    GaborBank(double period, int bins_) : bins(bins_) {
        const double sigma = period / 2.0;
        r = static_cast<int>(std::lround(period));
        const int side = 2 * r + 1;
        taps.assign(bins, std::vector<double>(static_cast<size_t>(side) * side));
        for (int b = 0; b < bins; ++b) {
            const double theta = -M_PI_2 + (b + 0.5) * M_PI / bins;
            const double nx = -std::sin(theta), ny = std::cos(theta);
            double env_sum = 0.0, tap_sum = 0.0;
            std::vector<double> env(taps[b].size());
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const size_t i = static_cast<size_t>(dy + r) * side + (dx + r);
                    env[i] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                    taps[b][i] = env[i] * std::cos(2.0 * M_PI * (dx * nx + dy * ny) / period);
                    env_sum += env[i];
                    tap_sum += taps[b][i];
                }
            }
            // Remove the DC component so flat regions stay flat.
            const double dc = tap_sum / env_sum;
            for (size_t i = 0; i < taps[b].size(); ++i) taps[b][i] -= dc * env[i];
        }
    }

    int bin_for(double theta) const {
        int b = static_cast<int>(std::floor((fold_orientation(theta) + M_PI_2) / M_PI * bins));
        if (b < 0) b = 0;
        if (b >= bins) b = bins - 1;
        return b;
    }
};

}  // namespace

GrayImage synth_master(uint64_t seed, const SingularityModel& model, double ridge_period,
                       int iterations, int width, int height) {
    if (ridge_period < 4.0) throw std::invalid_argument("ridge period must be >= 4");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    model.validate(width, height);

    const OrientationField flow = orientation_model(model, width, height);
    const GaborBank bank(ridge_period, 36);
    Rng rng(seed);

    // Seed impulses: one per ridge-period-sized cell, random sign.
    const size_t n = static_cast<size_t>(width) * height;
    std::vector<double> field(n, 0.0);
    const int n_seeds =
        std::max(8, static_cast<int>(n / static_cast<size_t>(ridge_period * ridge_period)));
    for (int i = 0; i < n_seeds; ++i) {
        const int x = rng.uniform_int(width);
        const int y = rng.uniform_int(height);
        field[static_cast<size_t>(y) * width + x] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }

    const int r = bank.r, side = 2 * r + 1;
    std::vector<double> next(n);
    for (int it = 0; it < iterations; ++it) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const size_t pi = static_cast<size_t>(y) * width + x;
                const std::vector<double>& taps = bank.taps[bank.bin_for(flow.theta[pi])];
                double acc = 0.0;
                const int dy0 = std::max(-r, -y), dy1 = std::min(r, height - 1 - y);
                const int dx0 = std::max(-r, -x), dx1 = std::min(r, width - 1 - x);
                for (int dy = dy0; dy <= dy1; ++dy) {
                    const double* frow = &field[static_cast<size_t>(y + dy) * width + x];
                    const double* trow = &taps[static_cast<size_t>(dy + r) * side + r];
                    for (int dx = dx0; dx <= dx1; ++dx) acc += trow[dx] * frow[dx];
                }
                next[pi] = acc;
            }
        }
        // Contrast normalization: rescale to unit RMS, then saturate.
        double ss = 0.0;
        for (double v : next) ss += v * v;
        const double inv_rms = 1.0 / (std::sqrt(ss / static_cast<double>(n)) + 1e-12);
        for (size_t i = 0; i < n; ++i) field[i] = std::tanh(2.0 * next[i] * inv_rms);
    }

    // Map to intensities (ridge +1 -> dark) and fade into white paper.
    GrayImage img(width, height);
    const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
    const double rx = 0.48 * width, ry = 0.48 * height;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const size_t pi = static_cast<size_t>(y) * width + x;
            const double d = ((x - cx) / rx) * ((x - cx) / rx) + ((y - cy) / ry) * ((y - cy) / ry);
            // smoothstep from 1 (d <= 0.75) down to 0 (d >= 1.1)
            double m;
            if (d <= 0.75) m = 1.0;
            else if (d >= 1.1) m = 0.0;
            else {
                const double t = (1.1 - d) / 0.35;
                m = t * t * (3.0 - 2.0 * t);
            }
            const double print = 0.5 * (1.0 - field[pi]);
            img.data[pi] = clamp01(m * print + (1.0 - m) * 1.0);
        }
    }
    return img;
}

void DegradeParams::validate() const {
    if (rotation_min_deg > rotation_max_deg || blur_len_min > blur_len_max ||
        blur_angle_min_deg > blur_angle_max_deg || alpha_min > alpha_max ||
        occlusion_frac_min > occlusion_frac_max)
        throw std::invalid_argument("degrade parameter range is reversed");
    if (blur_len_min < 1) throw std::invalid_argument("blur length must be >= 1");
    if (alpha_min < 0.0 || alpha_max > 1.0)
        throw std::invalid_argument("alpha range must be within [0, 1]");
    if (translation_frac < 0 || dilate_radius_max < 0 || occlusion_max < 0 || noise_sigma < 0)
        throw std::invalid_argument("degrade parameters must be nonnegative");
}

DegradeResult degrade(const GrayImage& master, const DegradeParams& params,
                      const std::vector<GrayImage>& backgrounds, uint64_t seed) {
    params.validate();
    if (backgrounds.empty()) throw std::invalid_argument("backgrounds must be nonempty");
    for (const GrayImage& b : backgrounds)
        if (!b.same_size(master)) throw std::invalid_argument("background size mismatch");

    Rng rng(seed);
    DrawnDegrade d;
    d.rotation_deg = rng.uniform(params.rotation_min_deg, params.rotation_max_deg);
    d.dx = rng.uniform(-params.translation_frac, params.translation_frac) * master.width;
    d.dy = rng.uniform(-params.translation_frac, params.translation_frac) * master.height;
    d.blur_len = params.blur_len_min + rng.uniform_int(params.blur_len_max - params.blur_len_min + 1);
    d.blur_angle_deg = rng.uniform(params.blur_angle_min_deg, params.blur_angle_max_deg);
    d.dilate_radius = rng.uniform_int(params.dilate_radius_max + 1);
    d.alpha = rng.uniform(params.alpha_min, params.alpha_max);
    d.background_index = rng.uniform_int(static_cast<int>(backgrounds.size()));
    const int n_occ = rng.uniform_int(params.occlusion_max + 1);
    for (int i = 0; i < n_occ; ++i) {
        const double frac =
            rng.uniform(params.occlusion_frac_min, params.occlusion_frac_max);
        // Rectangle with random aspect in [0.5, 2] covering `frac` of the area.
        const double aspect = rng.uniform(0.5, 2.0);
        int ow = static_cast<int>(std::lround(std::sqrt(frac * master.width * master.height * aspect)));
        int oh = static_cast<int>(std::lround(std::sqrt(frac * master.width * master.height / aspect)));
        ow = std::clamp(ow, 1, master.width);
        oh = std::clamp(oh, 1, master.height);
        const int ox = rng.uniform_int(master.width - ow + 1);
        const int oy = rng.uniform_int(master.height - oh + 1);
        d.occlusions.push_back({ox, oy, ow, oh});
    }
    d.noise_sigma = params.noise_sigma;

    GrayImage img = warp_affine(master, d.rotation_deg, d.dx, d.dy, 1.0);
    if (d.blur_len > 1)
        img = convolve2d(img, make_motion(d.blur_len, d.blur_angle_deg), BorderMode::Replicate);
    if (d.dilate_radius >= 1) img = gray_dilate(img, d.dilate_radius);
    const GrayImage& bg = backgrounds[d.background_index];
    img = blend(img, bg, d.alpha);
    for (const auto& [ox, oy, ow, oh] : d.occlusions)
        for (int y = oy; y < oy + oh; ++y)
            for (int x = ox; x < ox + ow; ++x) img.at(x, y) = bg.at(x, y);
    if (d.noise_sigma > 0.0)
        for (auto& v : img.data) v = clamp01(v + rng.normal(0.0, d.noise_sigma));
    return {std::move(img), std::move(d)};
}

std::vector<GrayImage> procedural_backgrounds(int width, int height, int count, uint64_t seed) {
    std::vector<GrayImage> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(k)));
        // Coarse random grid upsampled bilinearly: low-frequency paper grain.
        const int cell = 12;
        const int gw = width / cell + 2, gh = height / cell + 2;
        std::vector<double> grid(static_cast<size_t>(gw) * gh);
        for (auto& g : grid) g = rng.uniform(0.6, 0.95);
        GrayImage img(width, height);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double fx = static_cast<double>(x) / cell, fy = static_cast<double>(y) / cell;
                const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
                const double ax = fx - x0, ay = fy - y0;
                const double v =
                    (1 - ax) * (1 - ay) * grid[static_cast<size_t>(y0) * gw + x0] +
                    ax * (1 - ay) * grid[static_cast<size_t>(y0) * gw + x0 + 1] +
                    (1 - ax) * ay * grid[static_cast<size_t>(y0 + 1) * gw + x0] +
                    ax * ay * grid[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
                img.at(x, y) = v;
            }
        }
        // Line clutter: a few dark strokes of random orientation.
        const int n_lines = 2 + rng.uniform_int(4);
        for (int l = 0; l < n_lines; ++l) {
            const double x0 = rng.uniform(0, width - 1), y0 = rng.uniform(0, height - 1);
            const double ang = rng.uniform(0, 2 * M_PI);
            const double len = rng.uniform(0.3, 1.0) * std::max(width, height);
            const double shade = rng.uniform(0.2, 0.55);
            const int steps = static_cast<int>(len);
            for (int s = 0; s < steps; ++s) {
                const int px = static_cast<int>(std::lround(x0 + s * std::cos(ang)));
                const int py = static_cast<int>(std::lround(y0 + s * std::sin(ang)));
                if (px < 0 || px >= width || py < 0 || py >= height) break;
                img.at(px, py) = shade;
            }
        }
        for (auto& v : img.data) v = clamp01(v);
        out.push_back(std::move(img));
    }
    return out;
}

void SynthParams::validate() const {
    if (ridge_period_min < 4.0 || ridge_period_min > ridge_period_max)
        throw std::invalid_argument("ridge period range invalid (must be >= 4)");
    if (gabor_iterations < 1) throw std::invalid_argument("gabor iterations must be >= 1");
    if (background_count < 1) throw std::invalid_argument("need at least one background");
    if (binarize_block < 3 || binarize_block % 2 == 0)
        throw std::invalid_argument("binarize block must be odd and >= 3");
}

namespace {

std::string id_tag(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "id_%04d", id);
    return buf;
}

json drawn_to_json(const DrawnDegrade& d) {
    json j;
    j["rotation_deg"] = d.rotation_deg;
    j["dx"] = d.dx;
    j["dy"] = d.dy;
    j["blur_len"] = d.blur_len;
    j["blur_angle_deg"] = d.blur_angle_deg;
    j["dilate_radius"] = d.dilate_radius;
    j["alpha"] = d.alpha;
    j["background_index"] = d.background_index;
    j["occlusions"] = d.occlusions;
    j["noise_sigma"] = d.noise_sigma;
    return j;
}

DrawnDegrade drawn_from_json(const json& j) {
    DrawnDegrade d;
    d.rotation_deg = j.at("rotation_deg").get<double>();
    d.dx = j.at("dx").get<double>();
    d.dy = j.at("dy").get<double>();
    d.blur_len = j.at("blur_len").get<int>();
    d.blur_angle_deg = j.at("blur_angle_deg").get<double>();
    d.dilate_radius = j.at("dilate_radius").get<int>();
    d.alpha = j.at("alpha").get<double>();
    d.background_index = j.at("background_index").get<int>();
    d.occlusions = j.at("occlusions").get<std::vector<std::array<int, 4>>>();
    d.noise_sigma = j.at("noise_sigma").get<double>();
    return d;
}

}  // namespace

DatasetManifest make_dataset(int n_identities, int impressions, const std::string& out_dir,
                             uint64_t seed, int width, int height, const DegradeParams& degrade_p,
                             const SynthParams& synth_p) {
    if (n_identities < 1 || impressions < 1)
        throw std::invalid_argument("need at least one identity and one impression");
    degrade_p.validate();
    synth_p.validate();

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + out_dir + "': " + ec.message());

    const std::vector<GrayImage> backgrounds =
        procedural_backgrounds(width, height, synth_p.background_count, Rng::derive(seed, 0xb9));

    DatasetManifest manifest;
    manifest.dir = out_dir;
    for (int id = 0; id < n_identities; ++id) {
        const uint64_t id_seed = Rng::derive(seed, static_cast<uint64_t>(id));
        Rng idrng(id_seed);

        // Draw the ridge-flow archetype: loop and delta counts, placement and
        // base direction all vary so identities stay mutually discriminable.
        SingularityModel model;
        model.base_angle = idrng.uniform(-0.6, 0.6);
        model.loops.emplace_back(idrng.uniform(0.25, 0.75) * width,
                                 idrng.uniform(0.20, 0.60) * height);
        if (idrng.uniform() < 0.30)
            model.loops.emplace_back(idrng.uniform(0.25, 0.75) * width,
                                     idrng.uniform(0.20, 0.60) * height);
        const double delta_draw = idrng.uniform();
        if (delta_draw < 0.75)
            model.deltas.emplace_back(idrng.uniform(0.20, 0.80) * width,
                                      idrng.uniform(0.55, 0.90) * height);
        if (delta_draw < 0.20)
            model.deltas.emplace_back(idrng.uniform(0.20, 0.80) * width,
                                      idrng.uniform(0.55, 0.90) * height);
        const double period = idrng.uniform(synth_p.ridge_period_min, synth_p.ridge_period_max);

        const GrayImage master = synth_master(Rng::derive(id_seed, 101), model, period,
                                              synth_p.gabor_iterations, width, height);
        // Target images keep the master's polarity (ridges dark): complement
        // of the ridge mask, so the objective correlates target and master.
        GrayImage target =
            adaptive_binarize(master, synth_p.binarize_block, synth_p.binarize_offset);
        for (auto& v : target.data) v = 1.0 - v;

        const std::string tag = id_tag(id);
        const std::string master_rel = tag + "_master.pgm";
        const std::string target_rel = tag + "_target.pgm";
        save_pgm(master, out_dir + "/" + master_rel);
        save_pgm(target, out_dir + "/" + target_rel);

        for (int imp = 0; imp < impressions; ++imp) {
            const uint64_t imp_seed = Rng::derive(id_seed, 200 + static_cast<uint64_t>(imp));
            DegradeResult res = degrade(master, degrade_p, backgrounds, imp_seed);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "_imp%02d.pgm", imp);
            const std::string latent_rel = tag + buf;
            save_pgm(res.latent, out_dir + "/" + latent_rel);

            SynthRecord rec;
            rec.id = id;
            rec.master = master_rel;
            rec.target = target_rel;
            rec.latent = latent_rel;
            rec.seed = imp_seed;
            rec.params = std::move(res.drawn);
            manifest.records.push_back(std::move(rec));
        }
    }
    save_manifest(manifest, out_dir + "/manifest.jsonl");
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (const SynthRecord& r : manifest.records) {
        json j;
        j["id"] = r.id;
        j["master"] = r.master;
        j["target"] = r.target;
        j["latent"] = r.latent;
        j["seed"] = r.seed;
        j["params"] = drawn_to_json(r.params);
        out << j.dump() << "\n";
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    DatasetManifest manifest;
    manifest.dir = std::filesystem::path(path).parent_path().string();
    if (manifest.dir.empty()) manifest.dir = ".";
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("bad manifest line " + std::to_string(lineno) + " in '" +
                                     path + "': " + e.what());
        }
        SynthRecord r;
        r.id = j.at("id").get<int>();
        r.master = j.at("master").get<std::string>();
        r.target = j.at("target").get<std::string>();
        r.latent = j.at("latent").get<std::string>();
        r.seed = j.at("seed").get<uint64_t>();
        r.params = drawn_from_json(j.at("params"));
        manifest.records.push_back(std::move(r));
    }
    return manifest;
}

std::string resolve_path(const DatasetManifest& manifest, const std::string& rel) {
    if (!rel.empty() && rel.front() == '/') return rel;
    return manifest.dir + "/" + rel;
}

}  // namespace ridgerec
