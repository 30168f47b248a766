#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gtad/model.h"
#include "gtad/octa.h"
#include "gtad/scoring.h"
#include "gtad/synthdata.h"
#include "gtad/tmf.h"
#include "gtad/trainer.h"

namespace gtad {

// Everything a run needs, parsed from a strict JSON document. Sections:
//   seed, data, model, train, fusion, metrics, prompts, gradcheck, checkpoint
// Unknown keys at any level raise ConfigError naming the key path. Missing
// keys keep the defaults below.
struct RunConfig {
  std::uint64_t seed = 7;
  SynthConfig data;
  ModelDims model;
  TrainConfig train;  // train.seed mirrors `seed`
  FusionWeights fusion;
  std::vector<double> fpr_limits{0.30, 0.01};
  PromptCatalog prompts = PromptCatalog::defaults();
  // Class names the prompt catalog accepts.
  std::vector<std::string> known_classes = class_catalog();
  GradcheckConfig gradcheck;
  DType checkpoint_dtype = DType::kF64;

  void set_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
  }
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical JSON (sorted keys, no whitespace) covering every field.
std::string to_json(const RunConfig& cfg);
// 16 hex digits of FNV-1a over the canonical JSON.
std::string config_hash(const RunConfig& cfg);

void validate(const RunConfig& cfg);

// Model widths with d_rgb / d_3d taken from the data section.
ModelDims model_dims(const RunConfig& cfg);

}  // namespace gtad
