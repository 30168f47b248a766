#include "gtad/evaluate.h"

#include <algorithm>
#include <cstdio>
#include <map>

#include "gtad/error.h"
#include "gtad/metrics.h"
#include "json.hpp"

namespace gtad {

using nlohmann::json;

std::vector<SampleMaps> score_samples(const Head& head,
                                      std::span<const LabeledSample> samples,
                                      const EvalOptions& opts) {
  validate(opts.fusion);
  std::map<std::string, TextAnchor> anchors;
  std::vector<SampleMaps> out;
  out.reserve(samples.size());
  for (const LabeledSample& s : samples) {
    auto it = anchors.find(s.class_name);
    if (it == anchors.end()) {
      if (std::find(opts.known_classes.begin(), opts.known_classes.end(), s.class_name) ==
          opts.known_classes.end()) {
        throw ValidationError("class '" + s.class_name + "' is not in the prompt catalog");
      }
      it = anchors.emplace(s.class_name, class_anchor(head, s.class_name, opts.prompts)).first;
    }
    out.push_back(score_sample(head, s.f_rgb, s.f_3d, s.mask, it->second, opts.fusion));
  }
  return out;
}

MetricsReport compute_metrics(std::span<const LabeledSample> samples,
                              std::span<const SampleMaps> maps,
                              std::span<const double> fpr_limits) {
  if (samples.size() != maps.size()) throw DimensionError("one map per sample required");
  if (samples.empty()) throw ValidationError("no test samples to evaluate");
  for (double f : fpr_limits) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("metrics.fpr_limits: each limit must lie in (0, 1]");
  }
  MetricsReport r;
  r.fpr_limits.assign(fpr_limits.begin(), fpr_limits.end());
  std::vector<std::string> order;
  for (const auto& s : samples) {
    if (std::find(order.begin(), order.end(), s.class_name) == order.end()) order.push_back(s.class_name);
  }
  for (const std::string& name : order) {
    BinaryLabeledScores image;
    std::vector<AnomalyMap> m;
    std::vector<PixelMask> gt;
    std::vector<ValidityMask> valid;
    ClassMetrics c;
    c.class_name = name;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].class_name != name) continue;
      image.scores.push_back(maps[i].score);
      image.labels.push_back(samples[i].is_anomalous);
      (samples[i].is_anomalous ? c.n_anomalous : c.n_nominal) += 1;
      m.push_back(maps[i].final_map);
      gt.push_back(samples[i].gt);
      valid.push_back(samples[i].mask);
    }
    try {
      c.i_auroc = auroc(image);
      c.p_auroc = pixel_auroc(m, gt, valid);
      const auto curve = pro_curve(m, gt, valid);
      for (double f : fpr_limits) c.aupro.push_back(normalized_area(curve, f));
    } catch (const ValidationError& e) {
      throw ValidationError("class '" + name + "': " + e.what());
    }
    r.classes.push_back(std::move(c));
  }
  const double n = static_cast<double>(r.classes.size());
  r.average.class_name = "Average";
  r.average.aupro.assign(fpr_limits.size(), 0.0);
  for (const auto& c : r.classes) {
    r.average.i_auroc += c.i_auroc;
    r.average.p_auroc += c.p_auroc;
    for (std::size_t j = 0; j < c.aupro.size(); ++j) r.average.aupro[j] += c.aupro[j];
    r.average.n_nominal += c.n_nominal;
    r.average.n_anomalous += c.n_anomalous;
  }
  r.average.i_auroc /= n;
  r.average.p_auroc /= n;
  for (double& a : r.average.aupro) a /= n;
  return r;
}

MetricsReport evaluate(const Head& head, std::span<const LabeledSample> test,
                       const EvalOptions& opts) {
  const auto maps = score_samples(head, test, opts);
  return compute_metrics(test, maps, opts.fpr_limits);
}

std::string aupro_label(double fpr_limit) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "AUPRO@%g%%", fpr_limit * 100.0);
  return buf;
}

std::string report_json(const MetricsReport& r) {
  auto row = [&](const ClassMetrics& c) {
    json j = {{"I-AUROC", c.i_auroc},
              {"P-AUROC", c.p_auroc},
              {"n_nominal", c.n_nominal},
              {"n_anomalous", c.n_anomalous}};
    for (std::size_t i = 0; i < r.fpr_limits.size(); ++i) j[aupro_label(r.fpr_limits[i])] = c.aupro[i];
    return j;
  };
  json classes = json::object();
  json order = json::array();
  for (const auto& c : r.classes) {
    classes[c.class_name] = row(c);
    order.push_back(c.class_name);
  }
  json doc = {{"classes", classes},
              {"Average", row(r.average)},
              {"class_order", order},
              {"fpr_limits", r.fpr_limits},
              {"config_hash", r.config_hash},
              {"seed", r.seed}};
  return doc.dump(2) + "\n";
}

}  // namespace gtad
