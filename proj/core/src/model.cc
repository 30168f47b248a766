#include "gtad/model.h"

#include "gtad/error.h"

namespace gtad {

void validate(const ModelDims& d) {
  if (d.d_rgb < 2 || d.d_3d < 2 || d.d_text < 2) {
    throw ConfigError("model: feature widths must be >= 2");
  }
  if (d.experts == 0 || d.top_k == 0 || d.top_k > d.experts) {
    throw ConfigError("model.top_k: need 1 <= top_k <= experts");
  }
  if (!(d.dropout_rate >= 0.0 && d.dropout_rate < 1.0)) {
    throw ConfigError("model.dropout_rate: must lie in [0, 1)");
  }
}

Head::Head(const ModelDims& dims, std::uint64_t seed)
    : dims_(dims), embedder_(dims.d_text, dims.text_seed) {
  validate(dims_);
  Rng rng(seed);
  if (dims_.mapper == MapperKind::kGacm) {
    params_.gacm = make_gacm(store_, "gacm", dims_.d_rgb, dims_.d_3d, rng);
  } else {
    params_.mlp_mapper = make_mlp(store_, "rgb_to_3d", dims_.d_rgb, dims_.d_3d, rng);
  }
  params_.d3_to_rgb = make_mlp(store_, "3d_to_rgb", dims_.d_3d, dims_.d_rgb, rng);
  params_.rgb_to_text = make_mlp(store_, "rgb_to_text", dims_.d_rgb, dims_.d_text, rng);
  params_.d3_to_text = make_mlp(store_, "3d_to_text", dims_.d_3d, dims_.d_text, rng);
  params_.octa = make_octa(store_, "octa", dims_.d_text, dims_.experts,
                           dims_.top_k, dims_.dropout_rate, rng);
}

namespace {

void check_inputs(const Head& head, const FeatureGrid& f_rgb, const FeatureGrid& f_3d) {
  require_grid(f_rgb, "rgb features");
  require_grid(f_3d, "3d features");
  if (f_rgb.shape()[0] != f_3d.shape()[0] || f_rgb.shape()[1] != f_3d.shape()[1]) {
    throw DimensionError("grid mismatch: rgb " + shape_string(f_rgb.shape()) +
                         " vs 3d " + shape_string(f_3d.shape()));
  }
  if (f_rgb.cols() != head.dims().d_rgb || f_3d.cols() != head.dims().d_3d) {
    throw DimensionError("feature widths " + std::to_string(f_rgb.cols()) + "/" +
                         std::to_string(f_3d.cols()) + " do not match model " +
                         std::to_string(head.dims().d_rgb) + "/" +
                         std::to_string(head.dims().d_3d));
  }
}

}  // namespace

Projections project_sample(const Head& head, const FeatureGrid& f_rgb,
                           const FeatureGrid& f_3d) {
  check_inputs(head, f_rgb, f_3d);
  const ParameterStore& store = head.store();
  const HeadParams& p = head.params();
  Tape t;
  Var rgb = t.constant(f_rgb);
  Var geo = t.constant(f_3d);
  Projections out;
  out.rgb_to_3d = t.value(ad::rgb_to_3d(t, head, rgb));
  out.d3_to_rgb = t.value(ad::project(t, store, p.d3_to_rgb, geo));
  out.rgb_to_text = t.value(ad::project(t, store, p.rgb_to_text, rgb));
  out.d3_to_text = t.value(ad::project(t, store, p.d3_to_text, geo));
  return out;
}

TextAnchor class_anchor(const Head& head, const std::string& class_name,
                        const PromptCatalog& catalog) {
  return octa_forward(class_name, catalog, head.embedder(), head.store(),
                      head.params().octa, Mode::kEval);
}

SampleMaps score_sample(const Head& head, const FeatureGrid& f_rgb,
                        const FeatureGrid& f_3d, const ValidityMask& valid,
                        const TextAnchor& anchor, const FusionWeights& w) {
  const Projections proj = project_sample(head, f_rgb, f_3d);
  if (valid.height() != f_rgb.shape()[0] || valid.width() != f_rgb.shape()[1]) {
    throw DimensionError("validity mask does not match the feature grid");
  }
  SampleMaps maps;
  maps.rgb = psi_rgb(f_rgb, proj.d3_to_rgb);
  maps.geo = psi_3d(f_3d, proj.rgb_to_3d);
  maps.text = psi_text(anchor.to_rgb(), proj.rgb_to_text, proj.d3_to_text);
  maps.final_map = fuse(maps.rgb, maps.geo, maps.text, w);
  zero_invalid(maps.final_map, valid);
  maps.score = image_score(maps.final_map, valid);
  return maps;
}

namespace ad {

Var rgb_to_3d(Tape& t, const Head& head, Var f_rgb) {
  const HeadParams& p = head.params();
  if (p.gacm) return gacm_forward(t, head.store(), *p.gacm, f_rgb);
  return project(t, head.store(), *p.mlp_mapper, f_rgb);
}

SampleLoss sample_loss(Tape& t, const Head& head, const LabeledSample& s,
                       Var anchor, const LossWeights& w) {
  check_inputs(head, s.f_rgb, s.f_3d);
  const ParameterStore& store = head.store();
  const HeadParams& p = head.params();
  Var rgb = t.constant(s.f_rgb);
  Var geo = t.constant(s.f_3d);
  Var to_3d = rgb_to_3d(t, head, rgb);
  Var to_rgb = project(t, store, p.d3_to_rgb, geo);
  Var rgb_text = project(t, store, p.rgb_to_text, rgb);
  Var geo_text = project(t, store, p.d3_to_text, geo);
  SampleLoss out;
  out.l_vis = visual_loss(t, rgb, geo, to_3d, to_rgb, s.mask, w);
  out.l_text = text_loss(t, rgb_text, geo_text, anchor, s.mask, w);
  out.l_total = add(t, out.l_vis, out.l_text);
  return out;
}

Var class_anchor(Tape& t, const Head& head, const std::string& class_name,
                 const PromptCatalog& catalog, Mode mode, Rng* dropout_rng) {
  const auto prompts = build_prompts(class_name, catalog);
  Var text = t.constant(head.embedder().embed(prompts));
  return octa_forward(t, head.store(), head.params().octa, text, mode, dropout_rng);
}

}  // namespace ad
}  // namespace gtad
