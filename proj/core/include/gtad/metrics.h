#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gtad/mask.h"
#include "gtad/scoring.h"

namespace gtad {

struct BinaryLabeledScores {
  std::vector<double> scores;
  std::vector<bool> labels;  // true = anomalous
};

// Mann-Whitney AUROC: (concordant + 0.5 * tied) / (P * N) over all
// positive/negative pairs. Throws ValidationError when a class is missing.
double auroc(const BinaryLabeledScores& s);

// AUROC over the pooled valid pixels of all samples.
double pixel_auroc(std::span<const AnomalyMap> maps,
                   std::span<const PixelMask> gt,
                   std::span<const ValidityMask> valid);

// Connected components of a mask under 8-connectivity. Each region lists
// linear pixel indices in ascending order; regions are ordered by their
// first pixel in raster order.
using Region = std::vector<std::size_t>;
using RegionSet = std::vector<Region>;
RegionSet connected_components(const Mask& mask);

struct ProCurvePoint {
  double fpr = 0.0;
  double pro = 0.0;
};

// Per-region overlap curve, one point per distinct score (descending
// threshold, predicted = score >= threshold), starting at (0, 0). Regions
// are the components of gt & valid per sample; FPR is over valid non-defect
// pixels.
std::vector<ProCurvePoint> pro_curve(std::span<const AnomalyMap> maps,
                                     std::span<const PixelMask> gt,
                                     std::span<const ValidityMask> valid);

// Area under the PRO curve for FPR in [0, fpr_limit], trapezoidal with
// linear interpolation at the limit, divided by fpr_limit.
double aupro(std::span<const AnomalyMap> maps, std::span<const PixelMask> gt,
             std::span<const ValidityMask> valid, double fpr_limit);

// Integration step of aupro exposed for reuse with precomputed curves.
double normalized_area(std::span<const ProCurvePoint> curve, double fpr_limit);

}  // namespace gtad
