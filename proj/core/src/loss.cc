#include "gtad/loss.h"

#include <cmath>
#include <string>

#include "gtad/error.h"

namespace gtad {

void validate(const LossWeights& w) {
  for (double v : {w.v2g, w.g2v, w.v2t, w.g2t}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError("loss weights must be finite and nonnegative");
    }
  }
}

namespace {

void require_patches(const Tensor& pred, const ValidityMask& mask, const char* what) {
  if (pred.rows() != mask.size()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(pred.rows()) +
                         " patches but mask is " + std::to_string(mask.height()) +
                         "x" + std::to_string(mask.width()));
  }
}

}  // namespace

MaskedLoss masked_cosine_loss(const Tensor& pred, const Tensor& target,
                              const ValidityMask& mask) {
  require_patches(pred, mask, "masked_cosine_loss");
  if (target.rows() != 1) {
    require_same_shape(pred, target, "masked_cosine_loss");
  } else if (target.cols() != pred.cols()) {
    throw DimensionError("masked_cosine_loss: width " + std::to_string(pred.cols()) +
                         " vs " + std::to_string(target.cols()));
  }
  Tape tape;
  Var out = ad::masked_cosine_distance(tape, tape.constant(pred),
                                       tape.constant(target), mask.bits());
  return {tape.value(out)[0], !mask.any()};
}

double visual_loss(const FeatureGrid& f_rgb, const FeatureGrid& f_3d,
                   const FeatureGrid& f_rgb_to_3d, const FeatureGrid& f_3d_to_rgb,
                   const ValidityMask& mask, const LossWeights& w) {
  require_same_shape(f_rgb_to_3d, f_3d, "visual_loss (rgb->3d vs 3d)");
  require_same_shape(f_3d_to_rgb, f_rgb, "visual_loss (3d->rgb vs rgb)");
  return w.v2g * masked_cosine_loss(f_rgb_to_3d, f_3d, mask).value +
         w.g2v * masked_cosine_loss(f_3d_to_rgb, f_rgb, mask).value;
}

double text_loss(const FeatureGrid& f_rgb_to_text, const FeatureGrid& f_3d_to_text,
                 const Tensor& anchor, const ValidityMask& mask,
                 const LossWeights& w) {
  return w.v2t * masked_cosine_loss(f_rgb_to_text, anchor, mask).value +
         w.g2t * masked_cosine_loss(f_3d_to_text, anchor, mask).value;
}

double total_loss(double l_vis, double l_text) {
  if (!std::isfinite(l_vis) || !std::isfinite(l_text)) {
    throw ValidationError("total_loss: non-finite component (vis=" +
                          std::to_string(l_vis) + ", text=" +
                          std::to_string(l_text) + ")");
  }
  return l_vis + l_text;
}

namespace ad {

Var visual_loss(Tape& t, Var f_rgb, Var f_3d, Var f_rgb_to_3d, Var f_3d_to_rgb,
                const ValidityMask& mask, const LossWeights& w) {
  require_patches(t.value(f_rgb), mask, "visual_loss");
  Var a = masked_cosine_distance(t, f_rgb_to_3d, f_3d, mask.bits());
  Var b = masked_cosine_distance(t, f_3d_to_rgb, f_rgb, mask.bits());
  return add(t, scale(t, a, w.v2g), scale(t, b, w.g2v));
}

Var text_loss(Tape& t, Var f_rgb_to_text, Var f_3d_to_text, Var anchor,
              const ValidityMask& mask, const LossWeights& w) {
  require_patches(t.value(f_rgb_to_text), mask, "text_loss");
  Var a = masked_cosine_distance(t, f_rgb_to_text, anchor, mask.bits());
  Var b = masked_cosine_distance(t, f_3d_to_text, anchor, mask.bits());
  return add(t, scale(t, a, w.v2t), scale(t, b, w.g2t));
}

}  // namespace ad
}  // namespace gtad
