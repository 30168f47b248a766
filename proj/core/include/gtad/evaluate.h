#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gtad/model.h"
#include "gtad/octa.h"
#include "gtad/scoring.h"
#include "gtad/synthdata.h"

namespace gtad {

struct EvalOptions {
  FusionWeights fusion;
  std::vector<double> fpr_limits{0.30, 0.01};
  PromptCatalog prompts = PromptCatalog::defaults();
  std::vector<std::string> known_classes = class_catalog();
};

struct ClassMetrics {
  std::string class_name;
  double i_auroc = 0.0;
  double p_auroc = 0.0;
  std::vector<double> aupro;  // one per fpr limit
  std::size_t n_nominal = 0;
  std::size_t n_anomalous = 0;
};

struct MetricsReport {
  std::vector<double> fpr_limits;
  std::vector<ClassMetrics> classes;  // order of first appearance in the test set
  ClassMetrics average;  // arithmetic means; counts are totals
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Final maps (invalid pixels zeroed) and image scores for every sample.
// Throws ValidationError naming any class outside opts.known_classes.
std::vector<SampleMaps> score_samples(const Head& head,
                                      std::span<const LabeledSample> samples,
                                      const EvalOptions& opts);

// Per-class metrics from precomputed maps. Each class needs nominal and
// anomalous samples.
MetricsReport compute_metrics(std::span<const LabeledSample> samples,
                              std::span<const SampleMaps> maps,
                              std::span<const double> fpr_limits);

MetricsReport evaluate(const Head& head, std::span<const LabeledSample> test,
                       const EvalOptions& opts);

// Column label for a limit, e.g. 0.3 -> "AUPRO@30%".
std::string aupro_label(double fpr_limit);

// JSON shaped like a results table: {"classes": {name: {metric: value}},
// "Average": {...}, "class_order": [...], counts, config_hash, seed}.
std::string report_json(const MetricsReport& r);

}  // namespace gtad
