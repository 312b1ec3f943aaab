#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ridgerec/energy.hpp"
#include "testutil.hpp"

using namespace ridgerec;
using testutil::random_image;
using testutil::stripes;

namespace {

// Small sigmas so the smoothing kernels fit the 8x8..16x16 test images.
EnergyParams small_params() {
    EnergyParams p;
    p.sigma_s = 1.0;
    p.sigma_o = 1.0;
    p.lambda = 0.1;
    return p;
}

}  // namespace

TEST_CASE("directional_gradients basics and oracle") {
    const EnergyParams p = small_params();
    const GrayImage flat(10, 10, 0.3);
    for (const GrayImage& g : directional_gradients(flat, p))
        for (double v : g.data) CHECK(std::abs(v) <= 1e-14);

    // Varying only down the columns (constant within each row): the
    // 0-degree derivative vanishes, the 90-degree one does not.
    GrayImage cols(12, 12);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) cols.at(x, y) = 0.2 + 0.05 * y;
    const auto fields = directional_gradients(cols, p);
    double g90_mag = 0.0;
    for (int y = 2; y < 10; ++y) {
        for (int x = 2; x < 10; ++x) {
            CHECK(std::abs(fields[0].at(x, y)) <= 1e-12);  // theta = 0
            g90_mag = std::max(g90_mag, std::abs(fields[2].at(x, y)));
        }
    }
    CHECK(g90_mag > 0.1);

    Rng rng(31);
    const GrayImage img = random_image(rng, 8, 8);
    const auto got = directional_gradients(img, p);
    for (size_t t = 0; t < p.orientation_set.size(); ++t) {
        const GrayImage want = testutil::direct_convolve(
            img, make_directional(p.orientation_set[t]), BorderMode::Replicate);
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(std::abs(got[t].data[i] - want.data[i]) <= 1e-12);
    }
}

TEST_CASE("grad_energy zero cases and symmetry") {
    const EnergyParams p = small_params();
    Rng rng(33);
    const GrayImage a = random_image(rng, 9, 9);
    const GradEnergy self = grad_energy(a, a, p);
    CHECK(self.value == 0.0);
    for (double v : self.grad.data) CHECK(v == 0.0);

    GrayImage shifted = a;
    for (auto& v : shifted.data) v += 0.13;
    CHECK(grad_energy(a, shifted, p).value <= 1e-25);

    const GrayImage b = random_image(rng, 9, 9);
    CHECK(grad_energy(a, b, p).value == doctest::Approx(grad_energy(b, a, p).value).epsilon(1e-12));
    CHECK_THROWS_AS(grad_energy(a, GrayImage(4, 4, 0.0), p), std::invalid_argument);
}

TEST_CASE("grad_energy gradient matches finite differences") {
    const EnergyParams p = small_params();
    Rng rng(35);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage target = random_image(rng, 8, 8);
        const GrayImage recon = random_image(rng, 8, 8);
        const GradEnergy ge = grad_energy(target, recon, p);
        const double err = testutil::gradient_check(
            recon, [&](const GrayImage& r) { return grad_energy(target, r, p).value; }, ge.grad);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("structure_tensor sign structure and Cauchy-Schwarz") {
    const EnergyParams p = small_params();
    const GrayImage flat(12, 12, 0.6);
    const StructureTensor tf = structure_tensor(flat, p);
    for (size_t i = 0; i < tf.gxx.size(); ++i) {
        CHECK(std::abs(tf.gxx[i]) <= 1e-14);
        CHECK(std::abs(tf.gxy[i]) <= 1e-14);
        CHECK(std::abs(tf.gyy[i]) <= 1e-14);
    }

    // Vertical ridges: intensity varies along x only.
    const GrayImage vert = stripes(24, 24, 8.0, 0.0);
    const StructureTensor tv = structure_tensor(vert, p);
    for (int y = 4; y < 20; ++y) {
        for (int x = 4; x < 20; ++x) {
            const size_t i = static_cast<size_t>(y) * 24 + x;
            CHECK(tv.gxx[i] > 100.0 * std::abs(tv.gxy[i]));
            CHECK(tv.gxx[i] > 100.0 * tv.gyy[i]);
        }
    }

    Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        const GrayImage img = random_image(rng, 10, 10);
        const StructureTensor t = structure_tensor(img, p);
        for (size_t i = 0; i < t.gxx.size(); ++i) {
            CHECK(t.gxx[i] >= 0.0);
            CHECK(t.gyy[i] >= 0.0);
            CHECK(t.gxy[i] * t.gxy[i] <= t.gxx[i] * t.gyy[i] + 1e-9);
        }
    }
}

TEST_CASE("orientation_field recovers stripe directions") {
    const EnergyParams p = small_params();

    // Horizontal stripes (varying along y) force theta = pi/2 in the interior.
    const GrayImage horiz = stripes(24, 24, 8.0, M_PI_2);
    const OrientationField fh = orientation_field(structure_tensor(horiz, p));
    for (int y = 4; y < 20; ++y)
        for (int x = 4; x < 20; ++x)
            CHECK(std::abs(testutil::wrapped_diff(fh.theta[y * 24 + x], M_PI_2)) <=
                  2.0 * M_PI / 180.0);

    // 45-degree stripes, period 8: interior orientation within 2 degrees.
    const GrayImage diag = stripes(32, 32, 8.0, M_PI / 4.0);
    const OrientationField fd = orientation_field(structure_tensor(diag, p));
    for (int y = 6; y < 26; ++y)
        for (int x = 6; x < 26; ++x)
            CHECK(std::abs(testutil::wrapped_diff(fd.theta[y * 32 + x], M_PI / 4.0)) <=
                  2.0 * M_PI / 180.0);

    // Constant image: degenerate atan2 convention gives 0 everywhere.
    const OrientationField fc = orientation_field(structure_tensor(GrayImage(10, 10, 0.4), p));
    for (double t : fc.theta) CHECK(t == 0.0);

    // Range contract.
    Rng rng(39);
    const OrientationField fr =
        orientation_field(structure_tensor(random_image(rng, 12, 12), p));
    for (double t : fr.theta) {
        CHECK(t > -M_PI_2 - 1e-12);
        CHECK(t <= M_PI_2 + 1e-12);
    }
}

TEST_CASE("orientation is invariant to positive affine intensity rescaling") {
    const EnergyParams p = small_params();
    Rng rng(41);
    GrayImage img = random_image(rng, 16, 16);
    const StructureTensor t1 = structure_tensor(img, p);
    const OrientationField o1 = orientation_field(t1);
    const ReliabilityField r1 = reliability_field(t1, p);

    GrayImage scaled = img;
    for (auto& v : scaled.data) v = 0.35 * v + 0.21;
    const OrientationField o2 = orientation_field(structure_tensor(scaled, p));
    for (size_t i = 0; i < o1.theta.size(); ++i) {
        if (r1.r[i] <= 0.1) continue;
        CHECK(std::abs(testutil::wrapped_diff(o1.theta[i], o2.theta[i])) <= 1e-9);
    }
}

TEST_CASE("reliability_field guard, stripes, clamp") {
    EnergyParams p;  // full-size sigmas on a big enough image
    const ReliabilityField rc = reliability_field(structure_tensor(GrayImage(40, 40, 0.5), p), p);
    for (double r : rc.r) CHECK(r == 0.0);  // guard path: no texture at all

    // Strong clean ridges at several angles: interior reliability near 1.
    for (double deg : {0.0, 30.0, 45.0, 90.0}) {
        const GrayImage s = stripes(64, 64, 8.0, deg * M_PI / 180.0);
        const ReliabilityField rf = reliability_field(structure_tensor(s, p), p);
        std::vector<double> interior;
        for (int y = 14; y < 50; ++y)
            for (int x = 14; x < 50; ++x) interior.push_back(rf.r[y * 64 + x]);
        CHECK(testutil::median(interior) >= 0.9);
    }

    // The reduced cross-inertia variant saturates at 2/3 on perfect diagonals.
    EnergyParams reduced = p;
    reduced.reduced_cross_inertia = true;
    const GrayImage diag = stripes(64, 64, 8.0, M_PI / 4.0);
    const ReliabilityField rr = reliability_field(structure_tensor(diag, reduced), reduced);
    std::vector<double> interior;
    for (int y = 14; y < 50; ++y)
        for (int x = 14; x < 50; ++x) interior.push_back(rr.r[y * 64 + x]);
    CHECK(testutil::median(interior) == doctest::Approx(2.0 / 3.0).epsilon(0.03));

    Rng rng(43);
    const EnergyParams ps = small_params();
    for (int trial = 0; trial < 5; ++trial) {
        const ReliabilityField r =
            reliability_field(structure_tensor(random_image(rng, 12, 12), ps), ps);
        for (double v : r.r) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("orientation_reliability_energy zero case and stripe contrast") {
    const EnergyParams p = small_params();
    Rng rng(45);
    const GrayImage a = random_image(rng, 10, 10);
    const OriRelEnergy self = orientation_reliability_energy(a, a, p);
    CHECK(self.e_ori == 0.0);
    CHECK(self.e_rel == 0.0);
    for (double v : self.grad.data) CHECK(v == 0.0);

    // Orthogonal stripes: the orientation energy sits near its (pi/2)^2 cap.
    const GrayImage s0 = stripes(48, 48, 8.0, 0.0);
    const GrayImage s90 = stripes(48, 48, 8.0, M_PI_2);
    const OriRelEnergy orth = orientation_reliability_energy(s0, s90, p);
    const double cap = M_PI_2 * M_PI_2;
    CHECK(orth.e_ori <= cap + 1e-9);
    CHECK(orth.e_ori >= 0.8 * cap);

    CHECK_THROWS_AS(orientation_reliability_energy(a, GrayImage(5, 5, 0.0), p),
                    std::invalid_argument);
}

TEST_CASE("orientation+reliability gradient matches finite differences") {
    const EnergyParams p = small_params();
    Rng rng(47);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage target = random_image(rng, 8, 8);
        const GrayImage recon = random_image(rng, 8, 8);
        const OriRelEnergy orr = orientation_reliability_energy(target, recon, p);
        const double err = testutil::gradient_check(
            recon,
            [&](const GrayImage& r) {
                const OriRelEnergy e = orientation_reliability_energy(target, r, p);
                return e.e_ori + e.e_rel;
            },
            orr.grad);
        CHECK(err <= 5e-4);
    }
}

TEST_CASE("total_energy composition, lambda = 0, target cache") {
    EnergyParams p = small_params();
    Rng rng(49);
    const GrayImage target = random_image(rng, 12, 12);
    const GrayImage recon = random_image(rng, 12, 12);

    EnergyParams p0 = p;
    p0.lambda = 0.0;
    const EnergyReport r0 = total_energy(target, recon, p0);
    CHECK(r0.e_total == r0.e_grad);

    const EnergyReport self = total_energy(target, target, p);
    CHECK(self.e_total == 0.0);

    const EnergyReport direct = total_energy(target, recon, p);
    CHECK(direct.e_total ==
          direct.e_grad + p.lambda * (direct.e_ori + direct.e_rel));
    CHECK(direct.n == 144);

    const TargetCache cache = make_target_cache(target, p);
    const EnergyReport cached = total_energy(cache, recon, p);
    CHECK(cached.e_grad == doctest::Approx(direct.e_grad).epsilon(1e-12));
    CHECK(cached.e_ori == doctest::Approx(direct.e_ori).epsilon(1e-12));
    CHECK(cached.e_rel == doctest::Approx(direct.e_rel).epsilon(1e-12));
    for (size_t i = 0; i < cached.grad_total.size(); ++i)
        CHECK(cached.grad_total.data[i] ==
              doctest::Approx(direct.grad_total.data[i]).epsilon(1e-10));
}

TEST_CASE("total_energy gradient matches finite differences at lambda 0.1") {
    const EnergyParams p = small_params();
    Rng rng(51);
    const GrayImage target = random_image(rng, 12, 12);
    const GrayImage recon = random_image(rng, 12, 12);
    const EnergyReport rep = total_energy(target, recon, p);
    const double err = testutil::gradient_check(
        recon, [&](const GrayImage& r) { return total_energy(target, r, p).e_total; },
        rep.grad_total);
    CHECK(err <= 5e-4);
}

TEST_CASE("energies are symmetric in their arguments") {
    const EnergyParams p = small_params();
    Rng rng(53);
    const GrayImage a = random_image(rng, 10, 10);
    const GrayImage b = random_image(rng, 10, 10);
    const EnergyReport ab = total_energy(a, b, p);
    const EnergyReport ba = total_energy(b, a, p);
    CHECK(ab.e_grad == doctest::Approx(ba.e_grad).epsilon(1e-12));
    CHECK(ab.e_ori == doctest::Approx(ba.e_ori).epsilon(1e-12));
    CHECK(ab.e_rel == doctest::Approx(ba.e_rel).epsilon(1e-12));
}
