#pragma once

#include <cstddef>
#include <vector>

#include "gtad/mask.h"
#include "gtad/tensor.h"

namespace gtad {

// H x W field of nonnegative, finite anomaly scores.
struct AnomalyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  AnomalyMap() = default;
  AnomalyMap(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), values(h * w, fill) {}

  double operator()(std::size_t r, std::size_t c) const { return values[r * width + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * width + c]; }
  std::size_t size() const { return values.size(); }
};

struct FusionWeights {
  double alpha = 0.5;
  double beta = 0.5;
};

void validate(const FusionWeights& w);

// Per-patch Euclidean distance between two H x W x D grids.
AnomalyMap distance_map(const FeatureGrid& a, const FeatureGrid& b);

// Distance between the observed RGB grid and the 3D->RGB prediction.
AnomalyMap psi_rgb(const FeatureGrid& f_rgb, const FeatureGrid& f_3d_to_rgb);
// Distance between the observed 3D grid and the RGB->3D prediction.
AnomalyMap psi_3d(const FeatureGrid& f_3d, const FeatureGrid& f_rgb_to_3d);
// Product of the two per-patch distances to the (broadcast) text anchor.
AnomalyMap psi_text(const Tensor& anchor, const FeatureGrid& f_rgb_to_text,
                    const FeatureGrid& f_3d_to_text);

// alpha * (rgb * geo) + beta * text, per pixel.
AnomalyMap fuse(const AnomalyMap& rgb, const AnomalyMap& geo,
                const AnomalyMap& text, const FusionWeights& w);

// Sets every invalid pixel to 0.
void zero_invalid(AnomalyMap& map, const ValidityMask& valid);

// Max over valid pixels; 0 when none is valid.
double image_score(const AnomalyMap& map, const ValidityMask& valid);

}  // namespace gtad
