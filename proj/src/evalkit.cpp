#include "ridgerec/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace ridgerec {

namespace {

bool is_binary(const GrayImage& img) {
    for (double v : img.data)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

}  // namespace

GrayImage thin(const GrayImage& binary) {
    if (!is_binary(binary)) throw std::invalid_argument("thin: input must be 0/1 valued");
    const int w = binary.width, h = binary.height;
    GrayImage img = binary;

    auto px = [&](int x, int y) -> int {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0;
        return img.at(x, y) != 0.0 ? 1 : 0;
    };

    std::vector<std::pair<int, int>> kill;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            kill.clear();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (!px(x, y)) continue;
                    // Neighbors clockwise from north.
                    const int p2 = px(x, y - 1), p3 = px(x + 1, y - 1), p4 = px(x + 1, y);
                    const int p5 = px(x + 1, y + 1), p6 = px(x, y + 1), p7 = px(x - 1, y + 1);
                    const int p8 = px(x - 1, y), p9 = px(x - 1, y - 1);
                    const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    if (b < 2 || b > 6) continue;
                    const int a = (p2 == 0 && p3 == 1) + (p3 == 0 && p4 == 1) +
                                  (p4 == 0 && p5 == 1) + (p5 == 0 && p6 == 1) +
                                  (p6 == 0 && p7 == 1) + (p7 == 0 && p8 == 1) +
                                  (p8 == 0 && p9 == 1) + (p9 == 0 && p2 == 1);
                    if (a != 1) continue;
                    if (pass == 0) {
                        if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
                    } else {
                        if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
                    }
                    kill.emplace_back(x, y);
                }
            }
            for (const auto& [x, y] : kill) img.at(x, y) = 0.0;
            if (!kill.empty()) changed = true;
        }
    }
    return img;
}

std::vector<Minutia> extract_minutiae(const GrayImage& skeleton,
                                      const OrientationField& orientation, int border_margin,
                                      int min_separation) {
    if (!is_binary(skeleton)) throw std::invalid_argument("extract_minutiae: not a binary image");
    if (skeleton.width != orientation.width || skeleton.height != orientation.height)
        throw std::invalid_argument("extract_minutiae: orientation field size mismatch");
    const int w = skeleton.width, h = skeleton.height;

    auto px = [&](int x, int y) -> int {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0;
        return skeleton.at(x, y) != 0.0 ? 1 : 0;
    };

    std::vector<Minutia> found;
    for (int y = border_margin; y < h - border_margin; ++y) {
        for (int x = border_margin; x < w - border_margin; ++x) {
            if (!px(x, y)) continue;
            const int c[8] = {px(x, y - 1),     px(x + 1, y - 1), px(x + 1, y),
                              px(x + 1, y + 1), px(x, y + 1),     px(x - 1, y + 1),
                              px(x - 1, y),     px(x - 1, y - 1)};
            int transitions = 0;
            for (int i = 0; i < 8; ++i) transitions += std::abs(c[i] - c[(i + 1) % 8]);
            const int cn = transitions / 2;
            if (cn != 1 && cn != 3) continue;
            Minutia m;
            m.x = x;
            m.y = y;
            m.kind = (cn == 1) ? MinutiaKind::Ending : MinutiaKind::Bifurcation;
            // Orientation field carries the gradient direction; the ridge
            // tangent is a quarter turn away.
            m.direction =
                fold_orientation(orientation.theta[static_cast<size_t>(y) * w + x] + M_PI_2);
            found.push_back(m);
        }
    }

    // Mutual suppression of close pairs (spurs and broken-ridge artifacts).
    std::vector<bool> drop(found.size(), false);
    const double min_sep2 = static_cast<double>(min_separation) * min_separation;
    for (size_t i = 0; i < found.size(); ++i) {
        for (size_t j = i + 1; j < found.size(); ++j) {
            const double ddx = found[i].x - found[j].x;
            const double ddy = found[i].y - found[j].y;
            if (ddx * ddx + ddy * ddy < min_sep2) {
                drop[i] = true;
                drop[j] = true;
            }
        }
    }
    std::vector<Minutia> out;
    for (size_t i = 0; i < found.size(); ++i)
        if (!drop[i]) out.push_back(found[i]);
    return out;
}

namespace {

double wrap_pi_diff(double a) {
    // Difference of pi-periodic directions, folded into (-pi/2, pi/2].
    return fold_orientation(a);
}

}  // namespace

double match_score(const std::vector<Minutia>& a, const std::vector<Minutia>& b,
                   const MatchTolerances& tol) {
    if (a.empty() || b.empty()) return 0.0;

    // Rotation pivot: centroid of a, so translation votes stay tight.
    double cax = 0, cay = 0;
    for (const Minutia& m : a) {
        cax += m.x;
        cay += m.y;
    }
    cax /= static_cast<double>(a.size());
    cay /= static_cast<double>(a.size());

    struct Vote {
        int n = 0;
        double dx = 0, dy = 0, phi = 0;
    };
    std::map<std::tuple<int, int, int>, Vote> bins;
    for (const Minutia& ma : a) {
        for (const Minutia& mb : b) {
            if (ma.kind != mb.kind) continue;
            const double phi = wrap_pi_diff(mb.direction - ma.direction);
            const double c = std::cos(phi), s = std::sin(phi);
            const double rx = c * (ma.x - cax) - s * (ma.y - cay) + cax;
            const double ry = s * (ma.x - cax) + c * (ma.y - cay) + cay;
            const double dx = mb.x - rx, dy = mb.y - ry;
            const std::tuple<int, int, int> key{
                static_cast<int>(std::floor(dx / tol.vote_bin_px)),
                static_cast<int>(std::floor(dy / tol.vote_bin_px)),
                static_cast<int>(std::floor(phi / tol.vote_bin_rad))};
            Vote& v = bins[key];
            ++v.n;
            v.dx += dx;
            v.dy += dy;
            v.phi += phi;
        }
    }
    if (bins.empty()) return 0.0;

    // std::map iteration order is deterministic; ties keep the first key.
    const Vote* best = nullptr;
    for (const auto& [key, v] : bins)
        if (!best || v.n > best->n) best = &v;
    const double phi = best->phi / best->n;
    const double tdx = best->dx / best->n, tdy = best->dy / best->n;
    const double c = std::cos(phi), s = std::sin(phi);

    // Apply the recovered transform to a, then greedy one-to-one matching.
    std::vector<double> axs(a.size()), ays(a.size()), adir(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        axs[i] = c * (a[i].x - cax) - s * (a[i].y - cay) + cax + tdx;
        ays[i] = s * (a[i].x - cax) + c * (a[i].y - cay) + cay + tdy;
        adir[i] = fold_orientation(a[i].direction + phi);
    }

    struct Cand {
        double d2;
        size_t i, j;
    };
    std::vector<Cand> cands;
    const double tol_d2 = tol.distance_px * tol.distance_px;
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t j = 0; j < b.size(); ++j) {
            if (a[i].kind != b[j].kind) continue;
            const double ddx = axs[i] - b[j].x, ddy = ays[i] - b[j].y;
            const double d2 = ddx * ddx + ddy * ddy;
            if (d2 > tol_d2) continue;
            if (std::abs(wrap_pi_diff(adir[i] - b[j].direction)) > tol.angle_rad) continue;
            cands.push_back({d2, i, j});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
        if (l.d2 != r.d2) return l.d2 < r.d2;
        if (l.i != r.i) return l.i < r.i;
        return l.j < r.j;
    });
    std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
    int matched = 0;
    for (const Cand& cd : cands) {
        if (used_a[cd.i] || used_b[cd.j]) continue;
        used_a[cd.i] = used_b[cd.j] = true;
        ++matched;
    }
    return static_cast<double>(matched) * matched /
           (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

CmcCurve cmc_curve(const ScoreMatrix& scores, std::vector<int>* ranks_out) {
    const size_t np = scores.probe_labels.size();
    const size_t ng = scores.gallery_labels.size();
    if (scores.scores.size() != np * ng)
        throw std::invalid_argument("cmc_curve: score matrix size mismatch");
    const std::set<int> gallery_set(scores.gallery_labels.begin(), scores.gallery_labels.end());
    for (int lbl : scores.probe_labels)
        if (!gallery_set.count(lbl))
            throw std::invalid_argument("cmc_curve: probe label " + std::to_string(lbl) +
                                        " absent from gallery");
    for (double s : scores.scores)
        if (!std::isfinite(s)) throw std::invalid_argument("cmc_curve: non-finite score");

    std::vector<int> ranks(np);
    for (size_t p = 0; p < np; ++p) {
        // Best-scored correct entry, then count strictly-better entries plus
        // equal-scored impostors ahead of it (pessimistic ties).
        double best_correct = -1.0;
        bool seen = false;
        for (size_t g = 0; g < ng; ++g) {
            if (scores.gallery_labels[g] != scores.probe_labels[p]) continue;
            if (!seen || scores.at(p, g) > best_correct) best_correct = scores.at(p, g);
            seen = true;
        }
        int ahead = 0;
        for (size_t g = 0; g < ng; ++g) {
            const double s = scores.at(p, g);
            if (s > best_correct)
                ++ahead;
            else if (s == best_correct && scores.gallery_labels[g] != scores.probe_labels[p])
                ++ahead;
        }
        ranks[p] = ahead + 1;
    }

    CmcCurve curve;
    curve.accuracy.resize(ng, 0.0);
    for (int r : ranks)
        if (r <= static_cast<int>(ng)) curve.accuracy[r - 1] += 1.0;
    double acc = 0.0;
    for (size_t k = 0; k < ng; ++k) {
        acc += curve.accuracy[k];
        curve.accuracy[k] = acc / static_cast<double>(np);
    }
    if (ranks_out) *ranks_out = std::move(ranks);
    return curve;
}

void save_minutiae_csv(const std::vector<Minutia>& minutiae, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "x,y,kind,direction_rad\n";
    char buf[128];
    for (const Minutia& m : minutiae) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%s,%.17g\n", m.x, m.y,
                      m.kind == MinutiaKind::Ending ? "ending" : "bifurcation", m.direction);
        out << buf;
    }
}

void save_scores_csv(const ScoreMatrix& scores, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "probe_index,probe_label,gallery_index,gallery_label,score\n";
    char buf[160];
    for (size_t p = 0; p < scores.probe_labels.size(); ++p) {
        for (size_t g = 0; g < scores.gallery_labels.size(); ++g) {
            std::snprintf(buf, sizeof(buf), "%zu,%d,%zu,%d,%.17g\n", p, scores.probe_labels[p], g,
                          scores.gallery_labels[g], scores.at(p, g));
            out << buf;
        }
    }
}

ScoreMatrix load_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "probe_index,probe_label,gallery_index,gallery_label,score")
        throw std::runtime_error("bad score CSV header in '" + path + "'");
    struct Cell {
        size_t p, g;
        int pl, gl;
        double s;
    };
    std::vector<Cell> cells;
    size_t np = 0, ng = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Cell c;
        if (std::sscanf(line.c_str(), "%zu,%d,%zu,%d,%lf", &c.p, &c.pl, &c.g, &c.gl, &c.s) != 5)
            throw std::runtime_error("bad score CSV row in '" + path + "': " + line);
        np = std::max(np, c.p + 1);
        ng = std::max(ng, c.g + 1);
        cells.push_back(c);
    }
    if (cells.size() != np * ng)
        throw std::runtime_error("score CSV in '" + path + "' is not a complete matrix");
    ScoreMatrix m;
    m.probe_labels.assign(np, 0);
    m.gallery_labels.assign(ng, 0);
    m.scores.assign(np * ng, 0.0);
    for (const Cell& c : cells) {
        m.probe_labels[c.p] = c.pl;
        m.gallery_labels[c.g] = c.gl;
        m.at(c.p, c.g) = c.s;
    }
    return m;
}

void save_cmc_csv(const CmcCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "rank,accuracy\n";
    char buf[64];
    for (size_t k = 0; k < curve.accuracy.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", k + 1, curve.accuracy[k]);
        out << buf;
    }
}

}  // namespace ridgerec
