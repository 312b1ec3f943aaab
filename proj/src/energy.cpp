#include "ridgerec/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ridgerec {

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Squared-magnitude floor below which the (2 gxy, gxx - gyy) vector is
// treated as the degenerate (0, 0) case: theta = 0 by convention, zero
// gradient. Set far below any genuine texture response so only summation
// residue on flat images lands here.
constexpr double kDegenerateTensor2 = 1e-60;

// 1-D Gaussian taps for the separable smoothing passes. The separable form
// with per-axis replicate clamping is identical to the full 2-D kernel with
// replicate border (the clamp factors per axis), just cheaper.
struct Gauss1d {
    std::vector<double> taps;
    int r = 0;
};

Gauss1d gauss1d(double sigma) {
    Gauss1d g;
    g.r = static_cast<int>(std::ceil(3.0 * sigma));
    g.taps.resize(2 * g.r + 1);
    double sum = 0.0;
    for (int i = -g.r; i <= g.r; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        g.taps[i + g.r] = v;
        sum += v;
    }
    for (auto& t : g.taps) t /= sum;
    return g;
}

void check_fits(const Gauss1d& g, int w, int h) {
    if (2 * g.r + 1 > std::min(w, h))
        throw std::invalid_argument("gaussian kernel side " + std::to_string(2 * g.r + 1) +
                                    " exceeds image " + std::to_string(w) + "x" +
                                    std::to_string(h));
}

using Field = std::vector<double>;

void smooth_x(const Field& src, int w, int h, const Gauss1d& g, Field& dst) {
    dst.assign(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* row = src.data() + static_cast<size_t>(y) * w;
        double* out = dst.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -g.r; i <= g.r; ++i) acc += g.taps[i + g.r] * row[clampi(x - i, 0, w - 1)];
            out[x] = acc;
        }
    }
}

void smooth_y(const Field& src, int w, int h, const Gauss1d& g, Field& dst) {
    dst.assign(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        double* out = dst.data() + static_cast<size_t>(y) * w;
        for (int i = -g.r; i <= g.r; ++i) {
            const double t = g.taps[i + g.r];
            const double* row = src.data() + static_cast<size_t>(clampi(y - i, 0, h - 1)) * w;
            for (int x = 0; x < w; ++x) out[x] += t * row[x];
        }
    }
}

Field smooth(const Field& src, int w, int h, const Gauss1d& g) {
    Field tmp, out;
    smooth_x(src, w, h, g, tmp);
    smooth_y(tmp, w, h, g, out);
    return out;
}

// Exact adjoints of the passes above (scatter with the same clamping).
void smooth_x_adj(const Field& f, int w, int h, const Gauss1d& g, Field& dst) {
    dst.assign(f.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* row = f.data() + static_cast<size_t>(y) * w;
        double* out = dst.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const double v = row[x];
            if (v == 0.0) continue;
            for (int i = -g.r; i <= g.r; ++i) out[clampi(x - i, 0, w - 1)] += v * g.taps[i + g.r];
        }
    }
}

void smooth_y_adj(const Field& f, int w, int h, const Gauss1d& g, Field& dst) {
    dst.assign(f.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* row = f.data() + static_cast<size_t>(y) * w;
        for (int i = -g.r; i <= g.r; ++i) {
            const double t = g.taps[i + g.r];
            double* out = dst.data() + static_cast<size_t>(clampi(y - i, 0, h - 1)) * w;
            for (int x = 0; x < w; ++x) out[x] += t * row[x];
        }
    }
}

Field smooth_adj(const Field& f, int w, int h, const Gauss1d& g) {
    Field tmp, out;
    smooth_y_adj(f, w, h, g, tmp);
    smooth_x_adj(tmp, w, h, g, out);
    return out;
}

// Full forward pass of the orientation/reliability chain for one image.
// Everything the backward pass needs is kept.
struct Analysis {
    int w = 0, h = 0;
    GrayImage gx, gy;                         // directional derivatives (0 and 90)
    Field gxx, gxy, gyy;                      // smoothed products
    Field theta;                              // 0.5 * atan2(2 gxy, gxx - gyy)
    Field phix, phiy;                         // cos/sin of 2 theta
    Field phixs, phiys;                       // smoothed vector field
    Field imin, imax, rel;                    // inertias + clamped reliability
    std::vector<uint8_t> rel_interior;        // 1 where d rel / d inertia is live
};

Analysis analyze(const GrayImage& image, const EnergyParams& p) {
    Analysis a;
    a.w = image.width;
    a.h = image.height;
    const size_t n = image.size();

    const Kernel s0 = make_directional(0);
    const Kernel s90 = make_directional(90);
    a.gx = convolve2d(image, s0, BorderMode::Replicate);
    a.gy = convolve2d(image, s90, BorderMode::Replicate);

    Field pxx(n), pxy(n), pyy(n);
    for (size_t i = 0; i < n; ++i) {
        pxx[i] = a.gx.data[i] * a.gx.data[i];
        pxy[i] = a.gx.data[i] * a.gy.data[i];
        pyy[i] = a.gy.data[i] * a.gy.data[i];
    }
    const Gauss1d gs = gauss1d(p.sigma_s);
    check_fits(gs, a.w, a.h);
    a.gxx = smooth(pxx, a.w, a.h, gs);
    a.gxy = smooth(pxy, a.w, a.h, gs);
    a.gyy = smooth(pyy, a.w, a.h, gs);

    a.theta.resize(n);
    a.phix.resize(n);
    a.phiy.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double c = a.gxx[i] - a.gyy[i];
        const double b = 2.0 * a.gxy[i];
        a.theta[i] = (c * c + b * b <= kDegenerateTensor2) ? 0.0 : 0.5 * std::atan2(b, c);
        a.phix[i] = std::cos(2.0 * a.theta[i]);
        a.phiy[i] = std::sin(2.0 * a.theta[i]);
    }

    const Gauss1d go = gauss1d(p.sigma_o);
    check_fits(go, a.w, a.h);
    a.phixs = smooth(a.phix, a.w, a.h, go);
    a.phiys = smooth(a.phiy, a.w, a.h, go);

    const double cross = p.reduced_cross_inertia ? 1.0 : 2.0;
    a.imin.resize(n);
    a.imax.resize(n);
    a.rel.resize(n);
    a.rel_interior.assign(n, 0);
    for (size_t i = 0; i < n; ++i) {
        const double trace = a.gxx[i] + a.gyy[i];
        const double imin = 0.5 * (trace - (a.gxx[i] - a.gyy[i]) * a.phixs[i] -
                                   cross * a.gxy[i] * a.phiys[i]);
        const double imax = trace - imin;
        a.imin[i] = imin;
        a.imax[i] = imax;
        if (imax > p.epsilon_r) {
            const double u = 1.0 - imin / imax;
            a.rel[i] = clamp01(u);
            a.rel_interior[i] = (u > 0.0 && u < 1.0) ? 1 : 0;
        } else {
            a.rel[i] = 0.0;
        }
    }
    return a;
}

// Reverse pass through analyze(): seeds are d loss / d theta (direct term)
// and d loss / d rel. Returns d loss / d image.
GrayImage analyze_backward(const GrayImage& image, const Analysis& a, const EnergyParams& p,
                           const Field& g_theta_seed, const Field& g_rel) {
    const size_t n = image.size();
    const double cross = p.reduced_cross_inertia ? 1.0 : 2.0;

    Field g_gxx(n, 0.0), g_gyy(n, 0.0), g_gxy(n, 0.0);
    Field g_phixs(n, 0.0), g_phiys(n, 0.0);

    // Reliability branch: rel = clamp01(1 - imin/imax), guard at imax <= eps.
    for (size_t i = 0; i < n; ++i) {
        if (g_rel[i] == 0.0 || !a.rel_interior[i]) continue;
        const double imax = a.imax[i];
        const double g_imin_direct = g_rel[i] * (-1.0 / imax);
        const double g_imax = g_rel[i] * (a.imin[i] / (imax * imax));
        // imax = trace - imin
        const double g_imin = g_imin_direct - g_imax;
        double g_trace = g_imax;
        // imin = (trace - (gxx - gyy) * phixs - cross * gxy * phiys) / 2
        g_trace += 0.5 * g_imin;
        const double g_diff = -0.5 * g_imin * a.phixs[i];
        g_phixs[i] += -0.5 * g_imin * (a.gxx[i] - a.gyy[i]);
        g_gxy[i] += -0.5 * g_imin * cross * a.phiys[i];
        g_phiys[i] += -0.5 * g_imin * cross * a.gxy[i];
        g_gxx[i] += g_trace + g_diff;
        g_gyy[i] += g_trace - g_diff;
    }

    // Vector-field smoothing adjoint, then the trig layer into theta.
    const Gauss1d go = gauss1d(p.sigma_o);
    const Field g_phix = smooth_adj(g_phixs, a.w, a.h, go);
    const Field g_phiy = smooth_adj(g_phiys, a.w, a.h, go);

    Field g_theta(n);
    for (size_t i = 0; i < n; ++i) {
        g_theta[i] = g_theta_seed[i] - 2.0 * a.phiy[i] * g_phix[i] + 2.0 * a.phix[i] * g_phiy[i];
    }

    // theta = 0.5 * atan2(b, c) with b = 2 gxy, c = gxx - gyy. The (0,0)
    // point is flat by convention.
    for (size_t i = 0; i < n; ++i) {
        if (g_theta[i] == 0.0) continue;
        const double c = a.gxx[i] - a.gyy[i];
        const double b = 2.0 * a.gxy[i];
        const double denom = c * c + b * b;
        if (denom <= kDegenerateTensor2) continue;
        const double g_c = g_theta[i] * 0.5 * (-b / denom);
        const double g_b = g_theta[i] * 0.5 * (c / denom);
        g_gxx[i] += g_c;
        g_gyy[i] -= g_c;
        g_gxy[i] += 2.0 * g_b;
    }

    // Tensor smoothing adjoint, products, then the derivative kernels.
    const Gauss1d gs = gauss1d(p.sigma_s);
    const Field g_pxx = smooth_adj(g_gxx, a.w, a.h, gs);
    const Field g_pxy = smooth_adj(g_gxy, a.w, a.h, gs);
    const Field g_pyy = smooth_adj(g_gyy, a.w, a.h, gs);

    GrayImage g_gx(a.w, a.h), g_gy(a.w, a.h);
    for (size_t i = 0; i < n; ++i) {
        g_gx.data[i] = 2.0 * a.gx.data[i] * g_pxx[i] + a.gy.data[i] * g_pxy[i];
        g_gy.data[i] = 2.0 * a.gy.data[i] * g_pyy[i] + a.gx.data[i] * g_pxy[i];
    }

    const Kernel s0 = make_directional(0);
    const Kernel s90 = make_directional(90);
    GrayImage gi = convolve2d_adjoint(g_gx, s0, BorderMode::Replicate);
    const GrayImage gi_y = convolve2d_adjoint(g_gy, s90, BorderMode::Replicate);
    for (size_t i = 0; i < n; ++i) gi.data[i] += gi_y.data[i];
    return gi;
}

void check_pair(const GrayImage& target, const GrayImage& recon) {
    if (!target.same_size(recon))
        throw std::invalid_argument("target and reconstruction dimensions differ");
    if (target.width <= 0 || target.height <= 0)
        throw std::invalid_argument("empty image");
}

}  // namespace

void EnergyParams::validate() const {
    if (orientation_set.empty()) throw std::invalid_argument("orientation_set must be nonempty");
    for (int t : orientation_set)
        if (t != 0 && t != 45 && t != 90 && t != 135)
            throw std::invalid_argument("orientation_set angles must be in {0,45,90,135}");
    if (sigma_s <= 0 || sigma_o <= 0) throw std::invalid_argument("smoothing sigmas must be > 0");
    if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
    if (epsilon_r <= 0) throw std::invalid_argument("epsilon_r must be > 0");
}

double fold_orientation(double a) {
    const double k = std::ceil((a - M_PI_2) / M_PI);
    return a - k * M_PI;
}

std::vector<GrayImage> directional_gradients(const GrayImage& image, const EnergyParams& params) {
    params.validate();
    if (image.width <= 0 || image.height <= 0) throw std::invalid_argument("empty image");
    std::vector<GrayImage> out;
    out.reserve(params.orientation_set.size());
    for (int theta : params.orientation_set)
        out.push_back(convolve2d(image, make_directional(theta), BorderMode::Replicate));
    return out;
}

GradEnergy grad_energy(const GrayImage& target, const GrayImage& recon,
                       const EnergyParams& params) {
    params.validate();
    check_pair(target, recon);
    const size_t n = target.size();
    GrayImage diff(target.width, target.height);
    for (size_t i = 0; i < n; ++i) diff.data[i] = recon.data[i] - target.data[i];

    GradEnergy res;
    res.grad = GrayImage(target.width, target.height);
    const double inv_nt = 1.0 / (static_cast<double>(n) * params.orientation_set.size());
    for (int theta : params.orientation_set) {
        const Kernel k = make_directional(theta);
        const GrayImage d = convolve2d(diff, k, BorderMode::Replicate);
        double ss = 0.0;
        for (double v : d.data) ss += v * v;
        res.value += ss * inv_nt;
        const GrayImage adj = convolve2d_adjoint(d, k, BorderMode::Replicate);
        for (size_t i = 0; i < n; ++i) res.grad.data[i] += 2.0 * inv_nt * adj.data[i];
    }
    return res;
}

StructureTensor structure_tensor(const GrayImage& image, const EnergyParams& params) {
    params.validate();
    const Analysis a = analyze(image, params);
    StructureTensor t;
    t.width = a.w;
    t.height = a.h;
    t.gxx = a.gxx;
    t.gxy = a.gxy;
    t.gyy = a.gyy;
    return t;
}

OrientationField orientation_field(const StructureTensor& tensor) {
    OrientationField f;
    f.width = tensor.width;
    f.height = tensor.height;
    f.theta.resize(tensor.gxx.size());
    for (size_t i = 0; i < f.theta.size(); ++i) {
        const double c = tensor.gxx[i] - tensor.gyy[i];
        const double b = 2.0 * tensor.gxy[i];
        f.theta[i] = (c * c + b * b <= 1e-60) ? 0.0 : 0.5 * std::atan2(b, c);
    }
    return f;
}

ReliabilityField reliability_field(const StructureTensor& tensor, const EnergyParams& params) {
    params.validate();
    const size_t n = tensor.gxx.size();
    ReliabilityField f;
    f.width = tensor.width;
    f.height = tensor.height;
    f.r.resize(n);

    const Gauss1d go = gauss1d(params.sigma_o);
    check_fits(go, tensor.width, tensor.height);
    Field phix(n), phiy(n);
    for (size_t i = 0; i < n; ++i) {
        const double c = tensor.gxx[i] - tensor.gyy[i];
        const double b = 2.0 * tensor.gxy[i];
        const double two_theta = (c * c + b * b <= 1e-60) ? 0.0 : std::atan2(b, c);
        phix[i] = std::cos(two_theta);
        phiy[i] = std::sin(two_theta);
    }
    const Field phixs = smooth(phix, tensor.width, tensor.height, go);
    const Field phiys = smooth(phiy, tensor.width, tensor.height, go);
    const double cross = params.reduced_cross_inertia ? 1.0 : 2.0;
    for (size_t i = 0; i < n; ++i) {
        const double trace = tensor.gxx[i] + tensor.gyy[i];
        const double imin = 0.5 * (trace - (tensor.gxx[i] - tensor.gyy[i]) * phixs[i] -
                                   cross * tensor.gxy[i] * phiys[i]);
        const double imax = trace - imin;
        f.r[i] = (imax > params.epsilon_r) ? clamp01(1.0 - imin / imax) : 0.0;
    }
    return f;
}

struct TargetCache::Impl {
    GrayImage target;
    Field theta, rel;
    std::vector<GrayImage> dir;  // directional derivative fields of the target
};

TargetCache make_target_cache(const GrayImage& target, const EnergyParams& params) {
    params.validate();
    auto impl = std::make_shared<TargetCache::Impl>();
    impl->target = target;
    const Analysis at = analyze(target, params);
    impl->theta = at.theta;
    impl->rel = at.rel;
    for (int theta : params.orientation_set)
        impl->dir.push_back(convolve2d(target, make_directional(theta), BorderMode::Replicate));
    return TargetCache{std::move(impl)};
}

namespace {

OriRelEnergy ori_rel_from_target_fields(const Field& theta_t, const Field& rel_t,
                                        const GrayImage& recon, const EnergyParams& params) {
    const size_t n = recon.size();
    const Analysis ar = analyze(recon, params);

    OriRelEnergy res;
    Field g_theta_seed(n, 0.0), g_rel(n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        double d = theta_t[i] - ar.theta[i];
        if (params.wrap_orientation_diff) d = fold_orientation(d);
        res.e_ori += d * d * inv_n;
        g_theta_seed[i] = -2.0 * inv_n * d;

        const double dr = rel_t[i] - ar.rel[i];
        res.e_rel += dr * dr * inv_n;
        g_rel[i] = -2.0 * inv_n * dr;
    }
    res.grad = analyze_backward(recon, ar, params, g_theta_seed, g_rel);
    return res;
}

}  // namespace

OriRelEnergy orientation_reliability_energy(const GrayImage& target, const GrayImage& recon,
                                            const EnergyParams& params) {
    params.validate();
    check_pair(target, recon);
    const Analysis at = analyze(target, params);
    return ori_rel_from_target_fields(at.theta, at.rel, recon, params);
}

EnergyReport total_energy(const GrayImage& target, const GrayImage& recon,
                          const EnergyParams& params) {
    params.validate();
    check_pair(target, recon);
    const GradEnergy g = grad_energy(target, recon, params);
    const OriRelEnergy orr = orientation_reliability_energy(target, recon, params);

    EnergyReport rep;
    rep.n = static_cast<int>(target.size());
    rep.e_grad = g.value;
    rep.e_ori = orr.e_ori;
    rep.e_rel = orr.e_rel;
    rep.e_total = g.value + params.lambda * (orr.e_ori + orr.e_rel);
    rep.grad_total = GrayImage(target.width, target.height);
    for (size_t i = 0; i < rep.grad_total.size(); ++i)
        rep.grad_total.data[i] = g.grad.data[i] + params.lambda * orr.grad.data[i];
    return rep;
}

EnergyReport total_energy(const TargetCache& target, const GrayImage& recon,
                          const EnergyParams& params) {
    params.validate();
    const TargetCache::Impl& tc = *target.impl;
    check_pair(tc.target, recon);
    const size_t n = recon.size();

    // grad term against the cached target derivative fields: the difference
    // of convolutions equals the convolution of the difference.
    EnergyReport rep;
    rep.n = static_cast<int>(n);
    rep.grad_total = GrayImage(recon.width, recon.height);
    const double inv_nt = 1.0 / (static_cast<double>(n) * params.orientation_set.size());
    for (size_t t = 0; t < params.orientation_set.size(); ++t) {
        const Kernel k = make_directional(params.orientation_set[t]);
        GrayImage d = convolve2d(recon, k, BorderMode::Replicate);
        for (size_t i = 0; i < n; ++i) d.data[i] -= tc.dir[t].data[i];
        double ss = 0.0;
        for (double v : d.data) ss += v * v;
        rep.e_grad += ss * inv_nt;
        const GrayImage adj = convolve2d_adjoint(d, k, BorderMode::Replicate);
        for (size_t i = 0; i < n; ++i) rep.grad_total.data[i] += 2.0 * inv_nt * adj.data[i];
    }

    const OriRelEnergy orr = ori_rel_from_target_fields(tc.theta, tc.rel, recon, params);
    rep.e_ori = orr.e_ori;
    rep.e_rel = orr.e_rel;
    rep.e_total = rep.e_grad + params.lambda * (orr.e_ori + orr.e_rel);
    for (size_t i = 0; i < n; ++i) rep.grad_total.data[i] += params.lambda * orr.grad.data[i];
    return rep;
}

}  // namespace ridgerec
