#include "gtad/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "gtad/error.h"

namespace gtad {

double auroc(const BinaryLabeledScores& s) {
  if (s.scores.size() != s.labels.size()) {
    throw DimensionError("auroc: " + std::to_string(s.scores.size()) +
                         " scores vs " + std::to_string(s.labels.size()) + " labels");
  }
  const std::size_t n = s.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.scores[a] < s.scores[b];
  });
  // Walk ascending groups of equal score; every positive in a group beats
  // all negatives seen in earlier groups and ties with the group's negatives.
  std::uint64_t twice_wins = 0, negatives_below = 0, positives = 0, negatives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < n && s.scores[order[j]] == s.scores[order[i]]) {
      (s.labels[order[j]] ? pos : neg) += 1;
      ++j;
    }
    twice_wins += 2 * pos * negatives_below + pos * neg;
    negatives_below += neg;
    positives += pos;
    negatives += neg;
    i = j;
  }
  if (positives == 0) throw ValidationError("auroc: no anomalous (positive) samples");
  if (negatives == 0) throw ValidationError("auroc: no normal (negative) samples");
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

namespace {

void check_sets(std::span<const AnomalyMap> maps, std::span<const PixelMask> gt,
                std::span<const ValidityMask> valid) {
  if (maps.size() != gt.size() || maps.size() != valid.size()) {
    throw DimensionError("metrics: map/gt/valid counts differ");
  }
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (gt[i].height() != maps[i].height || gt[i].width() != maps[i].width ||
        valid[i].height() != maps[i].height || valid[i].width() != maps[i].width) {
      throw DimensionError("metrics: mask shape differs from map " + std::to_string(i));
    }
  }
}

}  // namespace

double pixel_auroc(std::span<const AnomalyMap> maps,
                   std::span<const PixelMask> gt,
                   std::span<const ValidityMask> valid) {
  check_sets(maps, gt, valid);
  BinaryLabeledScores pooled;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t p = 0; p < maps[i].size(); ++p) {
      if (!valid[i][p]) continue;
      pooled.scores.push_back(maps[i].values[p]);
      pooled.labels.push_back(gt[i][p]);
    }
  }
  return auroc(pooled);
}

RegionSet connected_components(const Mask& mask) {
  const std::size_t h = mask.height(), w = mask.width();
  std::vector<std::uint8_t> seen(mask.size(), 0);
  RegionSet regions;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    Region region;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      region.push_back(p);
      const std::size_t r = p / w, c = p % w;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (!dr && !dc) continue;
          const auto nr = static_cast<std::ptrdiff_t>(r) + dr;
          const auto nc = static_cast<std::ptrdiff_t>(c) + dc;
          if (nr < 0 || nc < 0 || nr >= static_cast<std::ptrdiff_t>(h) ||
              nc >= static_cast<std::ptrdiff_t>(w)) {
            continue;
          }
          const std::size_t q = static_cast<std::size_t>(nr) * w +
                                static_cast<std::size_t>(nc);
          if (mask[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
    std::sort(region.begin(), region.end());
    regions.push_back(std::move(region));
  }
  return regions;
}

std::vector<ProCurvePoint> pro_curve(std::span<const AnomalyMap> maps,
                                     std::span<const PixelMask> gt,
                                     std::span<const ValidityMask> valid) {
  check_sets(maps, gt, valid);
  struct Pixel {
    double score;
    std::int64_t region;  // -1 for normal pixels
  };
  std::vector<Pixel> pixels;
  std::vector<double> region_weight;  // 1 / |region|
  std::size_t normals = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    Mask defect(gt[i].height(), gt[i].width());
    for (std::size_t p = 0; p < defect.size(); ++p) defect.set(p, gt[i][p] && valid[i][p]);
    std::vector<std::int64_t> label(defect.size(), -1);
    for (const Region& region : connected_components(defect)) {
      const auto id = static_cast<std::int64_t>(region_weight.size());
      region_weight.push_back(1.0 / static_cast<double>(region.size()));
      for (std::size_t p : region) label[p] = id;
    }
    for (std::size_t p = 0; p < maps[i].size(); ++p) {
      if (!valid[i][p]) continue;
      pixels.push_back({maps[i].values[p], label[p]});
      if (label[p] < 0) ++normals;
    }
  }
  if (region_weight.empty()) throw ValidationError("aupro: no ground-truth regions");
  if (normals == 0) throw ValidationError("aupro: no normal valid pixels");

  std::stable_sort(pixels.begin(), pixels.end(),
                   [](const Pixel& a, const Pixel& b) { return a.score > b.score; });
  const double region_count = static_cast<double>(region_weight.size());
  std::vector<ProCurvePoint> curve{{0.0, 0.0}};
  std::size_t false_positives = 0;
  double overlap_sum = 0.0;
  for (std::size_t i = 0; i < pixels.size();) {
    std::size_t j = i;
    while (j < pixels.size() && pixels[j].score == pixels[i].score) {
      if (pixels[j].region < 0) {
        ++false_positives;
      } else {
        overlap_sum += region_weight[static_cast<std::size_t>(pixels[j].region)];
      }
      ++j;
    }
    curve.push_back({static_cast<double>(false_positives) / static_cast<double>(normals),
                     std::min(1.0, overlap_sum / region_count)});
    i = j;
  }
  return curve;
}

double normalized_area(std::span<const ProCurvePoint> curve, double fpr_limit) {
  if (!(fpr_limit > 0.0 && fpr_limit <= 1.0)) {
    throw ValidationError("aupro: fpr limit " + std::to_string(fpr_limit) +
                          " outside (0, 1]");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const ProCurvePoint& a = curve[i - 1];
    const ProCurvePoint& b = curve[i];
    if (b.fpr <= fpr_limit) {
      area += (b.fpr - a.fpr) * (a.pro + b.pro) * 0.5;
      continue;
    }
    if (a.fpr < fpr_limit) {
      const double pro_at = a.pro + (b.pro - a.pro) * (fpr_limit - a.fpr) / (b.fpr - a.fpr);
      area += (fpr_limit - a.fpr) * (a.pro + pro_at) * 0.5;
    }
    break;
  }
  return area / fpr_limit;
}

double aupro(std::span<const AnomalyMap> maps, std::span<const PixelMask> gt,
             std::span<const ValidityMask> valid, double fpr_limit) {
  if (!(fpr_limit > 0.0 && fpr_limit <= 1.0)) {
    throw ValidationError("aupro: fpr limit " + std::to_string(fpr_limit) +
                          " outside (0, 1]");
  }
  return normalized_area(pro_curve(maps, gt, valid), fpr_limit);
}

}  // namespace gtad
