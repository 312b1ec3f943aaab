#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ridgerec/energy.hpp"
#include "ridgerec/image.hpp"

namespace ridgerec {

// Zhang-Suen iterative thinning to a 1-pixel-wide skeleton. Input values must
// be exactly 0 or 1 (ridge = 1); only deletions happen, so skeleton <= input.
GrayImage thin(const GrayImage& binary);

enum class MinutiaKind { Ending, Bifurcation };

struct Minutia {
    int x = 0, y = 0;
    MinutiaKind kind = MinutiaKind::Ending;
    double direction = 0.0;  // ridge tangent, radians in (-pi/2, pi/2]
};

// Crossing-number extraction on a thinned skeleton: half the sum of absolute
// neighbor transitions around the 8-cycle; 1 -> ending, 3 -> bifurcation.
// Minutiae within border_margin of the edge are dropped; pairs closer than
// min_separation suppress each other (spur removal). Directions are the ridge
// tangent, i.e. the orientation-field angle rotated a quarter turn.
std::vector<Minutia> extract_minutiae(const GrayImage& skeleton,
                                      const OrientationField& orientation, int border_margin,
                                      int min_separation);

struct MatchTolerances {
    double distance_px = 12.0;
    double angle_rad = 20.0 * M_PI / 180.0;
    double vote_bin_px = 8.0;
    double vote_bin_rad = 15.0 * M_PI / 180.0;
};

// Rigid-alignment voting matcher: every cross pair with matching type
// hypothesizes (dx, dy, dphi); the best quantized bin's mean transform is
// applied and inliers are counted with a greedy one-to-one assignment.
// Score = matched^2 / (|a| * |b|); 0 when either list is empty.
double match_score(const std::vector<Minutia>& a, const std::vector<Minutia>& b,
                   const MatchTolerances& tol = MatchTolerances{});

struct ScoreMatrix {
    std::vector<int> probe_labels;
    std::vector<int> gallery_labels;
    std::vector<double> scores;  // probe-major

    double at(size_t p, size_t g) const { return scores[p * gallery_labels.size() + g]; }
    double& at(size_t p, size_t g) { return scores[p * gallery_labels.size() + g]; }
};

struct CmcCurve {
    std::vector<double> accuracy;  // accuracy[k-1] = fraction of probes with rank <= k
};

// Ranks are pessimistic under ties: the best correct entry is placed after
// every equal-scored impostor. Throws if a probe label is absent from the
// gallery. Also returns the per-probe ranks.
CmcCurve cmc_curve(const ScoreMatrix& scores, std::vector<int>* ranks_out = nullptr);

void save_minutiae_csv(const std::vector<Minutia>& minutiae, const std::string& path);
void save_scores_csv(const ScoreMatrix& scores, const std::string& path);
ScoreMatrix load_scores_csv(const std::string& path);
void save_cmc_csv(const CmcCurve& curve, const std::string& path);

}  // namespace ridgerec
