#include "gtad/oracles.h"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

#include "gtad/error.h"

namespace gtad::oracle {

double pairwise_auroc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw DimensionError("oracle: score/label count mismatch");
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  if (pairs == 0.0) throw ValidationError("oracle: need both classes");
  return wins / pairs;
}

RegionSet union_find_components(const Mask& mask) {
  const std::size_t h = mask.height(), w = mask.width();
  std::vector<std::size_t> parent(mask.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) continue;
          if (!mask(rr, cc)) continue;
          const std::size_t a = find(r * w + c), b = find(rr * w + cc);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
      }
    }
  }
  std::map<std::size_t, Region> groups;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask[p]) groups[find(p)].push_back(p);
  }
  RegionSet out;
  for (auto& [root, region] : groups) out.push_back(std::move(region));
  std::sort(out.begin(), out.end(), [](const Region& a, const Region& b) { return a[0] < b[0]; });
  return out;
}

double exhaustive_aupro(std::span<const AnomalyMap> maps, std::span<const PixelMask> gt,
                        std::span<const ValidityMask> valid, double fpr_limit) {
  struct SampleRegions {
    const AnomalyMap* map;
    const ValidityMask* valid;
    const PixelMask* gt;
    RegionSet regions;
  };
  std::vector<SampleRegions> samples;
  std::vector<double> thresholds;
  std::size_t region_total = 0, normals = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    Mask defect(gt[i].height(), gt[i].width());
    for (std::size_t p = 0; p < defect.size(); ++p) defect.set(p, gt[i][p] && valid[i][p]);
    samples.push_back({&maps[i], &valid[i], &gt[i], union_find_components(defect)});
    region_total += samples.back().regions.size();
    for (std::size_t p = 0; p < maps[i].size(); ++p) {
      if (!valid[i][p]) continue;
      thresholds.push_back(maps[i].values[p]);
      if (!gt[i][p]) ++normals;
    }
  }
  if (region_total == 0 || normals == 0) throw ValidationError("oracle: degenerate aupro input");
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
  for (double t : thresholds) {
    std::size_t fp = 0;
    double overlap = 0.0;
    for (const auto& s : samples) {
      for (std::size_t p = 0; p < s.map->size(); ++p) {
        if ((*s.valid)[p] && !(*s.gt)[p] && s.map->values[p] >= t) ++fp;
      }
      for (const Region& region : s.regions) {
        std::size_t hit = 0;
        for (std::size_t p : region) hit += s.map->values[p] >= t ? 1 : 0;
        overlap += static_cast<double>(hit) / static_cast<double>(region.size());
      }
    }
    curve.emplace_back(static_cast<double>(fp) / static_cast<double>(normals),
                       overlap / static_cast<double>(region_total));
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    auto [x0, y0] = curve[i - 1];
    auto [x1, y1] = curve[i];
    if (x0 >= fpr_limit) break;
    if (x1 > fpr_limit) {
      y1 = y0 + (y1 - y0) * (fpr_limit - x0) / (x1 - x0);
      x1 = fpr_limit;
    }
    area += 0.5 * (x1 - x0) * (y0 + y1);
  }
  return area / fpr_limit;
}

}  // namespace gtad::oracle
