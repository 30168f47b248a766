#pragma once

#include <string>

#include "gtad/autodiff.h"
#include "gtad/params.h"
#include "gtad/rng.h"
#include "gtad/tensor.h"

namespace gtad {

// Geometry-aware RGB -> 3D feature mapper.
//
//   sem   = phi_s(x)              geo = phi_g(x)
//   gate  = sigmoid(W_g geo + b_g)
//   fused = geo * gate + sem * (1 - gate)
//   y     = R(x) + GELU(LN(fused))
//
// phi_s, phi_g and R carry the width change D_rgb -> D_3d; the gate transform
// is square in D_3d. LN normalizes each patch vector independently.
struct GacmParams {
  LinearParams phi_s;
  LinearParams phi_g;
  LinearParams gate;
  LayerNormParams ln;
  LinearParams residual;
  std::size_t d_rgb = 0;
  std::size_t d_3d = 0;
};

enum class GacmInit {
  // phi_s, phi_g uniform; gate zero; R identity (zero-padded); LN gain 1.
  kDefault,
  // Everything zero except R = identity, so the map is x -> R(x).
  kPassThrough,
};

GacmParams make_gacm(ParameterStore& store, const std::string& prefix,
                     std::size_t d_rgb, std::size_t d_3d, Rng& rng,
                     GacmInit init = GacmInit::kDefault);

struct GacmBranches {
  FeatureGrid semantic;
  FeatureGrid geometric;
};

GacmBranches gacm_bifurcate(const ParameterStore& store, const GacmParams& p,
                            const FeatureGrid& f_rgb);
// Elementwise values in (0, 1).
FeatureGrid gacm_gate(const ParameterStore& store, const GacmParams& p,
                      const FeatureGrid& f_geo);
FeatureGrid gacm_fuse(const FeatureGrid& f_sem, const FeatureGrid& f_geo,
                      const FeatureGrid& gate);
FeatureGrid gacm_forward(const ParameterStore& store, const GacmParams& p,
                         const FeatureGrid& f_rgb);

namespace ad {
Var gacm_forward(Tape& t, const ParameterStore& store, const GacmParams& p,
                 Var f_rgb);
}  // namespace ad

}  // namespace gtad
