#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gtad/autodiff.h"
#include "gtad/params.h"
#include "gtad/projector.h"
#include "gtad/rng.h"
#include "gtad/tensor.h"

namespace gtad {

// Normal-state prompt grammar. States contain the class placeholder "[c]",
// templates contain the state placeholder "[s]".
struct PromptCatalog {
  std::vector<std::string> states;
  std::vector<std::string> templates;

  // 7 states x 2 templates.
  static PromptCatalog defaults();
};

// |states| x |templates| sentences, state-major: for each state, every
// template in order.
std::vector<std::string> build_prompts(const std::string& class_name,
                                       const PromptCatalog& catalog);

// Sentence encoder. Implementations must be deterministic: identical input
// lists give identical N x D matrices with finite entries.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::size_t dim() const = 0;
  virtual Tensor embed(std::span<const std::string> sentences) const = 0;
};

// Each token (lower-cased, surrounding punctuation stripped) maps to a
// seeded pseudo-random unit vector; a sentence is the L2-normalized sum of
// its token vectors.
class HashingTextEmbedder final : public TextEmbedder {
 public:
  HashingTextEmbedder(std::size_t dim, std::uint64_t seed);
  std::size_t dim() const override { return dim_; }
  Tensor embed(std::span<const std::string> sentences) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Sparse mixture of experts: per row, the k experts with the largest gate
// logits are evaluated and mixed with softmax weights over those k logits.
struct MoeParams {
  std::vector<MlpParams> experts;
  LinearParams gate;
  std::size_t k = 1;
};

MoeParams make_moe(ParameterStore& store, const std::string& prefix,
                   std::size_t dim, std::size_t experts, std::size_t k,
                   Rng& rng);

// A single learnable query prototype attends over the enhanced text rows;
// the result is refined by an MLP on (prototype + attended), then a
// dropout-guarded FFN residual and a final layer norm.
struct PrototypeParams {
  ParamId prototype;  // 1 x D
  LinearParams wq;
  LinearParams wk;
  LinearParams wv;
  double scale = 1.0;  // sqrt(D)
  MlpParams post_mlp;
  MlpParams ffn;
  LayerNormParams final_ln;
  double dropout_rate = 0.0;
};

PrototypeParams make_prototype(ParameterStore& store, const std::string& prefix,
                               std::size_t dim, double dropout_rate, Rng& rng);

struct OctaParams {
  MoeParams moe;
  PrototypeParams proto;
  std::size_t dim = 0;
};

OctaParams make_octa(ParameterStore& store, const std::string& prefix,
                     std::size_t dim, std::size_t experts, std::size_t k,
                     double dropout_rate, Rng& rng);

enum class Mode { kTrain, kEval };

// The object-conditioned text anchor. One vector serves as both the RGB-side
// and the 3D-side anchor.
class TextAnchor {
 public:
  explicit TextAnchor(Tensor value) : value_(std::move(value)) {}
  const Tensor& to_rgb() const { return value_; }
  const Tensor& to_3d() const { return value_; }
  const Tensor& value() const { return value_; }

 private:
  Tensor value_;
};

struct MoeOutput {
  Tensor enhanced;
  std::vector<std::vector<std::size_t>> selected;
};
MoeOutput moe_forward(const ParameterStore& store, const MoeParams& p,
                      const Tensor& text);

struct AttentionOutput {
  Tensor attended;  // 1 x D
  Tensor weights;   // 1 x N
};
AttentionOutput prototype_attention(const ParameterStore& store,
                                    const PrototypeParams& p,
                                    const Tensor& enhanced);

// `dropout_rng` is required in train mode when dropout_rate > 0.
Tensor octa_refine(const ParameterStore& store, const PrototypeParams& p,
                   const Tensor& attended, Mode mode,
                   Rng* dropout_rng = nullptr);

TextAnchor octa_forward(const std::string& class_name,
                        const PromptCatalog& catalog,
                        const TextEmbedder& embedder,
                        const ParameterStore& store, const OctaParams& p,
                        Mode mode, Rng* dropout_rng = nullptr);

namespace ad {
struct MoeVars {
  Var enhanced;
  std::vector<std::vector<std::size_t>> selected;
};
MoeVars moe_forward(Tape& t, const ParameterStore& store, const MoeParams& p,
                    Var text);
// Returns attended (1 x D); `weights` receives the 1 x N attention row.
Var prototype_attention(Tape& t, const ParameterStore& store,
                        const PrototypeParams& p, Var enhanced,
                        Var* weights = nullptr);
Var octa_refine(Tape& t, const ParameterStore& store, const PrototypeParams& p,
                Var attended, Mode mode, Rng* dropout_rng);
// Full chain from a prompt-embedding matrix to the 1 x D anchor.
Var octa_forward(Tape& t, const ParameterStore& store, const OctaParams& p,
                 Var text, Mode mode, Rng* dropout_rng);
}  // namespace ad

}  // namespace gtad
