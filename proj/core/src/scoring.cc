#include "gtad/scoring.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtad/error.h"
#include "gtad/ops.h"

namespace gtad {

void validate(const FusionWeights& w) {
  if (!std::isfinite(w.alpha) || !std::isfinite(w.beta) || w.alpha < 0.0 ||
      w.beta < 0.0) {
    throw ConfigError("fusion weights must be finite and nonnegative");
  }
}

namespace {

void require_same_map(const AnomalyMap& a, const AnomalyMap& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError(std::string(what) + ": map " + std::to_string(a.height) +
                         "x" + std::to_string(a.width) + " vs " +
                         std::to_string(b.height) + "x" + std::to_string(b.width));
  }
}

}  // namespace

AnomalyMap distance_map(const FeatureGrid& a, const FeatureGrid& b) {
  require_grid(a, "distance_map");
  require_same_shape(a, b, "distance_map");
  AnomalyMap out(a.shape()[0], a.shape()[1]);
  for (std::size_t p = 0; p < out.size(); ++p) {
    out.values[p] = euclidean_distance(a.row_span(p), b.row_span(p));
  }
  return out;
}

AnomalyMap psi_rgb(const FeatureGrid& f_rgb, const FeatureGrid& f_3d_to_rgb) {
  return distance_map(f_rgb, f_3d_to_rgb);
}

AnomalyMap psi_3d(const FeatureGrid& f_3d, const FeatureGrid& f_rgb_to_3d) {
  return distance_map(f_3d, f_rgb_to_3d);
}

AnomalyMap psi_text(const Tensor& anchor, const FeatureGrid& f_rgb_to_text,
                    const FeatureGrid& f_3d_to_text) {
  require_grid(f_rgb_to_text, "psi_text");
  require_same_shape(f_rgb_to_text, f_3d_to_text, "psi_text");
  if (anchor.size() != f_rgb_to_text.cols()) {
    throw DimensionError("psi_text: anchor width " + std::to_string(anchor.size()) +
                         " vs feature width " + std::to_string(f_rgb_to_text.cols()));
  }
  AnomalyMap out(f_rgb_to_text.shape()[0], f_rgb_to_text.shape()[1]);
  for (std::size_t p = 0; p < out.size(); ++p) {
    out.values[p] = euclidean_distance(anchor.values(), f_rgb_to_text.row_span(p)) *
                    euclidean_distance(anchor.values(), f_3d_to_text.row_span(p));
  }
  return out;
}

AnomalyMap fuse(const AnomalyMap& rgb, const AnomalyMap& geo,
                const AnomalyMap& text, const FusionWeights& w) {
  require_same_map(rgb, geo, "fuse");
  require_same_map(rgb, text, "fuse");
  AnomalyMap out(rgb.height, rgb.width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = w.alpha * (rgb.values[i] * geo.values[i]) + w.beta * text.values[i];
  }
  return out;
}

void zero_invalid(AnomalyMap& map, const ValidityMask& valid) {
  if (valid.size() != map.size()) throw DimensionError("zero_invalid: mask size");
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!valid[i]) map.values[i] = 0.0;
  }
}

double image_score(const AnomalyMap& map, const ValidityMask& valid) {
  if (valid.height() != map.height || valid.width() != map.width) {
    throw DimensionError("image_score: mask does not match map");
  }
  double best = 0.0;
  bool seen = false;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!valid[i]) continue;
    best = seen ? std::max(best, map.values[i]) : map.values[i];
    seen = true;
  }
  return best;
}

}  // namespace gtad
