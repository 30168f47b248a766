#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gtad/gradcheck.h"
#include "gtad/loss.h"
#include "gtad/model.h"
#include "gtad/octa.h"
#include "gtad/synthdata.h"

namespace gtad {

struct TrainConfig {
  std::size_t steps = 200;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 7;
  LossWeights weights;
};

void validate(const TrainConfig& cfg);

// First and second moments, one pair per store tensor.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t t = 0;

  static AdamState zeros_for(const ParameterStore& store);
};

struct LossRecord {
  std::size_t step = 0;
  double l_vis = 0.0;
  double l_text = 0.0;
  double l_total = 0.0;
};

struct BatchLoss {
  double l_vis = 0.0;  // batch means
  double l_text = 0.0;
  double l_total = 0.0;
  std::size_t empty_masks = 0;
};

// Forward and backward over a batch; leaves mean-loss gradients in the store.
// Throws ValidationError if a sample is anomalous.
BatchLoss accumulate_gradients(Head& head,
                               std::span<const LabeledSample* const> batch,
                               const PromptCatalog& catalog,
                               const LossWeights& weights, Mode mode,
                               Rng* dropout_rng);

// Mean batch loss from a pure forward pass (no gradients, eval mode).
BatchLoss evaluate_loss(const Head& head,
                        std::span<const LabeledSample* const> batch,
                        const PromptCatalog& catalog, const LossWeights& weights);

// Zeroes every gradient tensor that holds a non-finite entry. Returns the
// names of the zeroed tensors; finite tensors are untouched.
std::vector<std::string> filter_nonfinite(ParameterStore& store);

// Adam update from the store's gradients. Tensors whose gradient is entirely
// zero because they were filtered still advance their moments.
void adam_update(ParameterStore& store, AdamState& state, const TrainConfig& cfg);

struct StepResult {
  BatchLoss loss;
  std::vector<std::string> filtered;
};

StepResult train_step(Head& head, AdamState& state,
                      std::span<const LabeledSample* const> batch,
                      const TrainConfig& cfg, const PromptCatalog& catalog,
                      Rng& dropout_rng);

struct TrainResult {
  Head head;
  std::vector<LossRecord> log;
  std::size_t steps = 0;
  std::vector<std::string> filtered_log;  // "step:name" entries
};

// Unified training over all classes: one head, class names only feed the
// prompts. Batches follow a seeded per-epoch shuffle.
TrainResult train(const TrainConfig& cfg, const ModelDims& dims,
                  std::span<const LabeledSample> train_set,
                  const PromptCatalog& catalog);

// Initial head for a training seed (what train() starts from).
Head initial_head(const ModelDims& dims, std::uint64_t seed);

struct GradcheckConfig {
  std::size_t height = 2;
  std::size_t width = 2;
  std::size_t d_rgb = 4;
  std::size_t d_3d = 6;
  std::size_t d_text = 8;
  std::size_t experts = 3;
  std::size_t top_k = 2;
  std::vector<std::string> classes{"bagel", "cookie"};
  PromptCatalog catalog{{"[c]", "flawless [c]", "[c] without defect"},
                        {"a photo of a [s].", "a photo of the [s]."}};
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;
  MapperKind mapper = MapperKind::kGacm;
};

// Random tiny batch (one sample per class, one invalid patch each) for
// gradient checking.
std::vector<LabeledSample> gradcheck_batch(const GradcheckConfig& cfg);

// Checks d L_total / d theta for every trainable tensor with dropout off.
GradCheckReport run_gradcheck(const GradcheckConfig& cfg);

}  // namespace gtad
