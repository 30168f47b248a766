#pragma once

#include <span>
#include <vector>

#include "gtad/mask.h"
#include "gtad/metrics.h"
#include "gtad/scoring.h"

// Slow reference implementations used to cross-check the metric code.
namespace gtad::oracle {

// Counts every positive/negative pair: 1 for a win, 1/2 for a tie.
double pairwise_auroc(std::span<const double> scores, const std::vector<bool>& labels);

// Components by union-find over the 8-neighbourhood; regions sorted by their
// smallest pixel index, pixels ascending.
RegionSet union_find_components(const Mask& mask);

// Recomputes FPR and mean per-region overlap from scratch at every distinct
// valid score, then integrates the resulting curve up to the limit.
double exhaustive_aupro(std::span<const AnomalyMap> maps, std::span<const PixelMask> gt,
                        std::span<const ValidityMask> valid, double fpr_limit);

}  // namespace gtad::oracle
