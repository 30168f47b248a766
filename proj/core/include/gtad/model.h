#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "gtad/autodiff.h"
#include "gtad/gacm.h"
#include "gtad/loss.h"
#include "gtad/octa.h"
#include "gtad/params.h"
#include "gtad/projector.h"
#include "gtad/scoring.h"
#include "gtad/synthdata.h"

namespace gtad {

enum class MapperKind {
  kGacm,  // geometry-aware mapper for RGB -> 3D
  kMlp,   // plain two-layer MLP for RGB -> 3D (ablation)
};

struct ModelDims {
  std::size_t d_rgb = 12;
  std::size_t d_3d = 18;
  std::size_t d_text = 16;
  std::size_t experts = 4;
  std::size_t top_k = 2;
  MapperKind mapper = MapperKind::kGacm;
  double dropout_rate = 0.1;
  std::uint64_t text_seed = 17;  // hashing embedder seed
};

void validate(const ModelDims& dims);

// All trainable pieces of the detection head. Construction order fixes the
// parameter order in the store.
struct HeadParams {
  std::optional<GacmParams> gacm;
  std::optional<MlpParams> mlp_mapper;
  MlpParams d3_to_rgb;
  MlpParams rgb_to_text;
  MlpParams d3_to_text;
  OctaParams octa;
};

class Head {
 public:
  Head(const ModelDims& dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  const HeadParams& params() const { return params_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const TextEmbedder& embedder() const { return embedder_; }

 private:
  ModelDims dims_;
  ParameterStore store_;
  HeadParams params_;
  HashingTextEmbedder embedder_;
};

// Cross-modal predictions for one sample.
struct Projections {
  FeatureGrid rgb_to_3d;
  FeatureGrid d3_to_rgb;
  FeatureGrid rgb_to_text;
  FeatureGrid d3_to_text;
};

Projections project_sample(const Head& head, const FeatureGrid& f_rgb,
                           const FeatureGrid& f_3d);

// Eval-mode anchor for a class.
TextAnchor class_anchor(const Head& head, const std::string& class_name,
                        const PromptCatalog& catalog);

struct SampleMaps {
  AnomalyMap rgb;
  AnomalyMap geo;
  AnomalyMap text;
  AnomalyMap final_map;  // invalid pixels zeroed
  double score = 0.0;
};

SampleMaps score_sample(const Head& head, const FeatureGrid& f_rgb,
                        const FeatureGrid& f_3d, const ValidityMask& valid,
                        const TextAnchor& anchor, const FusionWeights& w);

namespace ad {

struct SampleLoss {
  Var l_vis;
  Var l_text;
  Var l_total;
};

Var rgb_to_3d(Tape& t, const Head& head, Var f_rgb);

// Per-sample objective with an externally built anchor variable.
SampleLoss sample_loss(Tape& t, const Head& head, const LabeledSample& s,
                       Var anchor, const LossWeights& w);

// Anchor variable from the class prompts.
Var class_anchor(Tape& t, const Head& head, const std::string& class_name,
                 const PromptCatalog& catalog, Mode mode, Rng* dropout_rng);

}  // namespace ad
}  // namespace gtad
