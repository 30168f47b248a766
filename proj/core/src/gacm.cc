#include "gtad/gacm.h"

#include "gtad/error.h"
#include "gtad/ops.h"

namespace gtad {

GacmParams make_gacm(ParameterStore& store, const std::string& prefix,
                     std::size_t d_rgb, std::size_t d_3d, Rng& rng,
                     GacmInit init) {
  const LinearInit branch =
      init == GacmInit::kDefault ? LinearInit::kUniform : LinearInit::kZero;
  GacmParams p;
  p.d_rgb = d_rgb;
  p.d_3d = d_3d;
  p.phi_s = make_linear(store, prefix + ".phi_s", d_rgb, d_3d, branch, rng);
  p.phi_g = make_linear(store, prefix + ".phi_g", d_rgb, d_3d, branch, rng);
  p.gate = make_linear(store, prefix + ".gate", d_3d, d_3d, LinearInit::kZero, rng);
  p.ln = make_layer_norm(store, prefix + ".ln", d_3d);
  p.residual = make_linear(store, prefix + ".residual", d_rgb, d_3d,
                           LinearInit::kIdentity, rng);
  return p;
}

GacmBranches gacm_bifurcate(const ParameterStore& store, const GacmParams& p,
                            const FeatureGrid& f_rgb) {
  return {apply(store, p.phi_s, f_rgb), apply(store, p.phi_g, f_rgb)};
}

FeatureGrid gacm_gate(const ParameterStore& store, const GacmParams& p,
                      const FeatureGrid& f_geo) {
  return sigmoid(apply(store, p.gate, f_geo));
}

FeatureGrid gacm_fuse(const FeatureGrid& f_sem, const FeatureGrid& f_geo,
                      const FeatureGrid& gate) {
  require_same_shape(f_sem, f_geo, "gacm_fuse");
  require_same_shape(f_geo, gate, "gacm_fuse");
  FeatureGrid out(f_geo.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f_geo[i] * gate[i] + f_sem[i] * (1.0 - gate[i]);
  }
  return out;
}

FeatureGrid gacm_forward(const ParameterStore& store, const GacmParams& p,
                         const FeatureGrid& f_rgb) {
  Tape tape;
  return tape.value(ad::gacm_forward(tape, store, p, tape.constant(f_rgb)));
}

namespace ad {

Var gacm_forward(Tape& t, const ParameterStore& store, const GacmParams& p,
                 Var f_rgb) {
  Var sem = linear(t, store, p.phi_s, f_rgb);
  Var geo = linear(t, store, p.phi_g, f_rgb);
  Var gate = sigmoid(t, linear(t, store, p.gate, geo));
  Var fused = add(t, mul(t, geo, gate), mul(t, sem, one_minus(t, gate)));
  Var mimic = gelu(t, layer_norm(t, store, p.ln, fused));
  return add(t, linear(t, store, p.residual, f_rgb), mimic);
}

}  // namespace ad
}  // namespace gtad
