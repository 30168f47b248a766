#pragma once

#include "gtad/autodiff.h"
#include "gtad/mask.h"
#include "gtad/tensor.h"

namespace gtad {

struct LossWeights {
  double v2g = 1.0;
  double g2v = 1.0;
  double v2t = 1.0;
  double g2t = 1.0;
};

// Throws ConfigError on negative or non-finite weights.
void validate(const LossWeights& w);

struct MaskedLoss {
  double value = 0.0;
  // No valid patch: value is 0 and the sample should be reported.
  bool empty_mask = false;
};

// Mean over valid patches of 1 - cos(pred_p, target_p). `target` may be a
// single row, in which case it is compared with every patch.
MaskedLoss masked_cosine_loss(const Tensor& pred, const Tensor& target,
                              const ValidityMask& mask);

// v2g * d(rgb->3d, 3d) + g2v * d(3d->rgb, rgb)
double visual_loss(const FeatureGrid& f_rgb, const FeatureGrid& f_3d,
                   const FeatureGrid& f_rgb_to_3d, const FeatureGrid& f_3d_to_rgb,
                   const ValidityMask& mask, const LossWeights& w);

// v2t * d(rgb->text, anchor) + g2t * d(3d->text, anchor), anchor broadcast.
double text_loss(const FeatureGrid& f_rgb_to_text, const FeatureGrid& f_3d_to_text,
                 const Tensor& anchor, const ValidityMask& mask,
                 const LossWeights& w);

// Throws ValidationError on non-finite input.
double total_loss(double l_vis, double l_text);

namespace ad {
Var visual_loss(Tape& t, Var f_rgb, Var f_3d, Var f_rgb_to_3d, Var f_3d_to_rgb,
                const ValidityMask& mask, const LossWeights& w);
Var text_loss(Tape& t, Var f_rgb_to_text, Var f_3d_to_text, Var anchor,
              const ValidityMask& mask, const LossWeights& w);
}  // namespace ad

}  // namespace gtad
