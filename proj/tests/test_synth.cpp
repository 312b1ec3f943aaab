#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ridgerec/pgm.hpp"
#include "ridgerec/synth.hpp"
#include "testutil.hpp"

using namespace ridgerec;

namespace {

// Winding of the orientation field around a discrete circuit: sum of wrapped
// consecutive differences. Loops wind by +pi (index +1/2), deltas by -pi.
double circuit_winding(const SingularityModel& model, int w, int h, double cx, double cy,
                       double radius, int steps = 720) {
    const OrientationField f = orientation_model(model, w, h);
    auto sample = [&](double angle) {
        const int x = std::min(w - 1, std::max(0, static_cast<int>(std::lround(cx + radius * std::cos(angle)))));
        const int y = std::min(h - 1, std::max(0, static_cast<int>(std::lround(cy + radius * std::sin(angle)))));
        return f.theta[static_cast<size_t>(y) * w + x];
    };
    double total = 0.0, prev = sample(0.0);
    for (int i = 1; i <= steps; ++i) {
        const double cur = sample(2.0 * M_PI * i / steps);
        total += testutil::wrapped_diff(cur, prev);
        prev = cur;
    }
    return total;
}

// Magnitude of the length-n DFT of one row at integer frequency bin k.
double row_dft_mag(const GrayImage& img, int y, int k) {
    double re = 0.0, im = 0.0;
    for (int x = 0; x < img.width; ++x) {
        const double phase = -2.0 * M_PI * k * x / img.width;
        re += img.at(x, y) * std::cos(phase);
        im += img.at(x, y) * std::sin(phase);
    }
    return std::sqrt(re * re + im * im);
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string temp_dir(const char* name) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    return p.string();
}

}  // namespace

TEST_CASE("orientation_model: uniform field and singular winding") {
    SingularityModel flat;
    flat.base_angle = 0.0;
    const OrientationField f = orientation_model(flat, 16, 16);
    for (double t : f.theta) CHECK(t == 0.0);

    SingularityModel loop;
    loop.loops.emplace_back(32.0, 32.0);
    CHECK(circuit_winding(loop, 64, 64, 32, 32, 12.0) == doctest::Approx(M_PI).epsilon(0.02));

    SingularityModel delta;
    delta.deltas.emplace_back(32.0, 32.0);
    CHECK(circuit_winding(delta, 64, 64, 32, 32, 12.0) == doctest::Approx(-M_PI).epsilon(0.02));

    // Exactly on the singular point the convention value applies.
    SingularityModel on_point;
    on_point.base_angle = 0.3;
    on_point.loops.emplace_back(5.0, 5.0);
    const OrientationField g = orientation_model(on_point, 16, 16);
    CHECK(g.theta[5 * 16 + 5] == doctest::Approx(0.3));

    SingularityModel bad;
    bad.loops.emplace_back(-3.0, 2.0);
    CHECK_THROWS_AS(orientation_model(bad, 16, 16), std::invalid_argument);
}

TEST_CASE("synth_master determinism and value range") {
    SingularityModel model;
    model.loops.emplace_back(30.0, 34.0);
    model.deltas.emplace_back(34.0, 62.0);
    const GrayImage a = synth_master(1234, model, 9.0, 6, 64, 80);
    const GrayImage b = synth_master(1234, model, 9.0, 6, 64, 80);
    CHECK(a.data == b.data);
    const GrayImage c = synth_master(1235, model, 9.0, 6, 64, 80);
    CHECK(a.data != c.data);
    for (double v : a.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(synth_master(1, model, 2.0, 6, 64, 80), std::invalid_argument);
}

TEST_CASE("synth_master dominant frequency tracks the ridge period") {
    // Vertical ridges (tangent pi/2): rows cross them at full frequency.
    SingularityModel model;
    model.base_angle = M_PI_2;
    const int w = 96, h = 96;
    const double period = 8.0;
    const GrayImage img = synth_master(777, model, period, 6, w, h);

    // Average row spectrum over the vignette interior, skip DC-ish bins.
    std::vector<double> spectrum(w / 2, 0.0);
    for (int y = h / 4; y < 3 * h / 4; ++y)
        for (int k = 2; k < w / 2; ++k) spectrum[k] += row_dft_mag(img, y, k);
    int peak = 2;
    for (int k = 3; k < w / 2; ++k)
        if (spectrum[k] > spectrum[peak]) peak = k;
    const double measured_period = static_cast<double>(w) / peak;
    CHECK(measured_period == doctest::Approx(period).epsilon(0.20));
}

TEST_CASE("synth_master orientation agrees with the flow model") {
    SingularityModel model;
    model.loops.emplace_back(30.0, 30.0);
    model.deltas.emplace_back(34.0, 60.0);
    const int w = 64, h = 80;
    const GrayImage img = synth_master(4242, model, 9.0, 6, w, h);

    EnergyParams p;
    const StructureTensor t = structure_tensor(img, p);
    const OrientationField measured = orientation_field(t);
    const ReliabilityField rel = reliability_field(t, p);
    const OrientationField flow = orientation_model(model, w, h);

    std::vector<double> errs;
    for (int y = 8; y < h - 8; ++y) {
        for (int x = 8; x < w - 8; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (rel.r[i] <= 0.5) continue;
            // The tensor angle is the gradient direction, normal to ridges.
            const double want = fold_orientation(flow.theta[i] + M_PI_2);
            errs.push_back(std::abs(testutil::wrapped_diff(measured.theta[i], want)));
        }
    }
    REQUIRE(errs.size() > 500);
    CHECK(testutil::median(errs) <= 10.0 * M_PI / 180.0);
}

TEST_CASE("degrade: identity configuration returns the master exactly") {
    SingularityModel model;
    model.loops.emplace_back(30.0, 40.0);
    const GrayImage master = synth_master(9, model, 10.0, 5, 64, 80);
    const auto backgrounds = procedural_backgrounds(64, 80, 2, 11);

    DegradeParams p;
    p.rotation_min_deg = p.rotation_max_deg = 0.0;
    p.translation_frac = 0.0;
    p.blur_len_min = p.blur_len_max = 1;
    p.dilate_radius_max = 0;
    p.alpha_min = p.alpha_max = 0.0;
    p.occlusion_max = 0;
    p.noise_sigma = 0.0;
    const DegradeResult res = degrade(master, p, backgrounds, 5);
    CHECK(res.latent.data == master.data);
    CHECK(res.drawn.blur_len == 1);
    CHECK(res.drawn.alpha == 0.0);
}

TEST_CASE("degrade: determinism and shape preservation") {
    SingularityModel model;
    model.loops.emplace_back(30.0, 40.0);
    const GrayImage master = synth_master(10, model, 9.0, 5, 64, 80);
    const auto backgrounds = procedural_backgrounds(64, 80, 4, 12);
    const DegradeParams p;  // defaults
    const DegradeResult a = degrade(master, p, backgrounds, 31337);
    const DegradeResult b = degrade(master, p, backgrounds, 31337);
    CHECK(a.latent.data == b.latent.data);
    CHECK(a.drawn.rotation_deg == b.drawn.rotation_deg);
    CHECK(a.drawn.occlusions == b.drawn.occlusions);
    CHECK(a.latent.width == master.width);
    CHECK(a.latent.height == master.height);
    for (double v : a.latent.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const DegradeResult c = degrade(master, p, backgrounds, 31338);
    CHECK(a.latent.data != c.latent.data);
}

TEST_CASE("degrade strictly increases the gradient objective against the target") {
    EnergyParams ep;
    const auto backgrounds = procedural_backgrounds(64, 80, 4, 77);
    const DegradeParams p;  // module defaults
    Rng seeder(2024);
    for (int trial = 0; trial < 20; ++trial) {
        SingularityModel model;
        model.loops.emplace_back(20.0 + 24.0 * seeder.uniform(), 20.0 + 20.0 * seeder.uniform());
        model.deltas.emplace_back(20.0 + 24.0 * seeder.uniform(), 50.0 + 20.0 * seeder.uniform());
        const double period = seeder.uniform(8.0, 12.0);
        const GrayImage master = synth_master(seeder.next_u64(), model, period, 6, 64, 80);
        GrayImage target = adaptive_binarize(master, 17, 0.02);
        for (auto& v : target.data) v = 1.0 - v;  // dataset targets are dark-ridge
        const DegradeResult res = degrade(master, p, backgrounds, seeder.next_u64());
        const double e_master = grad_energy(target, master, ep).value;
        const double e_degraded = grad_energy(target, res.latent, ep).value;
        CHECK(e_degraded > e_master);
    }
}

TEST_CASE("make_dataset: counting, determinism, loadability, target sanity") {
    const std::string dir1 = temp_dir("rr_ds1");
    const std::string dir2 = temp_dir("rr_ds2");
    DegradeParams dp;
    SynthParams sp;
    const DatasetManifest m1 = make_dataset(2, 3, dir1, 555, 64, 80, dp, sp);
    CHECK(m1.records.size() == 6);

    std::set<int> ids;
    std::set<std::string> targets;
    for (const auto& r : m1.records) {
        ids.insert(r.id);
        targets.insert(r.target);
    }
    CHECK(ids.size() == 2);
    CHECK(targets.size() == 2);

    // Same seed: byte-identical manifest and images.
    const DatasetManifest m2 = make_dataset(2, 3, dir2, 555, 64, 80, dp, sp);
    CHECK(file_bytes(dir1 + "/manifest.jsonl") == file_bytes(dir2 + "/manifest.jsonl"));
    for (const auto& r : m1.records) {
        CHECK(file_bytes(dir1 + "/" + r.latent) == file_bytes(dir2 + "/" + r.latent));
        CHECK(file_bytes(dir1 + "/" + r.master) == file_bytes(dir2 + "/" + r.master));
    }

    // Round trip through the manifest loader; every referenced file parses.
    const DatasetManifest loaded = load_manifest(dir1 + "/manifest.jsonl");
    REQUIRE(loaded.records.size() == 6);
    for (const auto& r : loaded.records) {
        const GrayImage master = load_pgm(resolve_path(loaded, r.master));
        const GrayImage target = load_pgm(resolve_path(loaded, r.target));
        const GrayImage latent = load_pgm(resolve_path(loaded, r.latent));
        CHECK(master.width == 64);
        CHECK(latent.height == 80);
        // Targets are binary (dark ridges) with a sane ridge fraction.
        double frac = 0.0;
        for (double v : target.data) {
            CHECK((v == 0.0 || v == 1.0));
            frac += 1.0 - v;
        }
        frac /= target.size();
        CHECK(frac >= 0.2);
        CHECK(frac <= 0.7);
    }
    CHECK(loaded.records[0].params.noise_sigma == m1.records[0].params.noise_sigma);

    CHECK_THROWS(make_dataset(1, 1, "/proc/nonexistent/xx", 1, 32, 32, dp, sp));
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}
