#include "commands.h"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "gtad/checkpoint.h"
#include "gtad/config.h"
#include "gtad/dataset_io.h"
#include "gtad/error.h"
#include "gtad/evaluate.h"
#include "gtad/metrics.h"
#include "gtad/oracles.h"
#include "gtad/tmf.h"
#include "gtad/trainer.h"
#include "json.hpp"

namespace gtad::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string class_name;
  std::string pgm;
  std::optional<std::uint64_t> seed;
  std::vector<double> limits;
  bool oracle_check = false;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

RunConfig load_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) {
    cfg.set_seed(*o.seed);
    cfg.gradcheck.seed = *o.seed;
  }
  return cfg;
}

void check_known(const RunConfig& cfg, const std::string& name) {
  for (const auto& k : cfg.known_classes) {
    if (k == name) return;
  }
  throw ValidationError("class '" + name + "' is not in the prompt catalog");
}

void check_dims(const RunConfig& cfg, const Manifest& m) {
  if (m.d_rgb != cfg.data.d_rgb || m.d_3d != cfg.data.d_3d) {
    throw ValidationError("shape mismatch: dataset widths " + std::to_string(m.d_rgb) + "/" +
                          std::to_string(m.d_3d) + ", model expects " +
                          std::to_string(cfg.data.d_rgb) + "/" + std::to_string(cfg.data.d_3d));
  }
}

int gen_data(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const Dataset data = gen_dataset(cfg.data, cfg.seed);
  const Manifest m = write_dataset(o.out, data, cfg);
  out << "wrote " << data.train.size() << " train and " << data.test.size()
      << " test samples to " << o.out << " (config " << m.config_hash << ")\n";
  return kOk;
}

int train_cmd(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const Manifest manifest = read_manifest(o.data);
  check_dims(cfg, manifest);
  LoadedDataset data = read_dataset(o.data);
  if (data.train.empty()) throw ValidationError("dataset " + o.data + " has no training samples");
  for (const auto& s : data.train) check_known(cfg, s.class_name);

  const TrainResult result = train(cfg.train, model_dims(cfg), data.train, cfg.prompts);
  const std::string hash = config_hash(cfg);
  save_checkpoint(o.out, make_checkpoint(cfg, result.head, result.steps));

  std::string log;
  for (const LossRecord& r : result.log) {
    log += json{{"step", r.step}, {"l_vis", r.l_vis}, {"l_text", r.l_text},
                {"l_total", r.l_total}, {"config_hash", hash}}
               .dump() +
           "\n";
  }
  write_file(o.out + ".loss.jsonl", log);
  for (const auto& entry : result.filtered_log) out << "filtered non-finite gradient " << entry << "\n";
  out << "trained " << result.steps << " steps";
  if (!result.log.empty()) {
    out << ", loss " << fmt("%.6f", result.log.front().l_total) << " -> "
        << fmt("%.6f", result.log.back().l_total);
  }
  out << "\ncheckpoint " << o.out << " (config " << hash << ")\n";
  return kOk;
}

// Recomputes every metric with the brute-force oracles.
void oracle_check(const MetricsReport& report, std::span<const LabeledSample> test,
                  std::span<const SampleMaps> maps, std::ostream& out) {
  constexpr double kAuproTolerance = 1e-6;
  for (const ClassMetrics& c : report.classes) {
    std::vector<double> image;
    std::vector<bool> image_labels;
    std::vector<double> pixels;
    std::vector<bool> pixel_labels;
    std::vector<AnomalyMap> m;
    std::vector<PixelMask> gt;
    std::vector<ValidityMask> valid;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test[i].class_name != c.class_name) continue;
      image.push_back(maps[i].score);
      image_labels.push_back(test[i].is_anomalous);
      for (std::size_t p = 0; p < test[i].mask.size(); ++p) {
        if (!test[i].mask[p]) continue;
        pixels.push_back(maps[i].final_map.values[p]);
        pixel_labels.push_back(test[i].gt[p]);
      }
      m.push_back(maps[i].final_map);
      gt.push_back(test[i].gt);
      valid.push_back(test[i].mask);
    }
    auto fail = [&](const std::string& metric, double got, double want) {
      throw ValidationError("oracle check failed for class '" + c.class_name + "' " + metric +
                            ": " + fmt("%.17g", got) + " vs oracle " + fmt("%.17g", want));
    };
    const double i_oracle = oracle::pairwise_auroc(image, image_labels);
    if (i_oracle != c.i_auroc) fail("I-AUROC", c.i_auroc, i_oracle);
    const double p_oracle = oracle::pairwise_auroc(pixels, pixel_labels);
    if (p_oracle != c.p_auroc) fail("P-AUROC", c.p_auroc, p_oracle);
    for (std::size_t j = 0; j < report.fpr_limits.size(); ++j) {
      const double a = oracle::exhaustive_aupro(m, gt, valid, report.fpr_limits[j]);
      if (std::abs(a - c.aupro[j]) > kAuproTolerance) fail(aupro_label(report.fpr_limits[j]), c.aupro[j], a);
    }
  }
  out << "oracle check passed (" << report.classes.size() << " classes)\n";
}

int eval_cmd(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  RunConfig cfg = ckpt.config;
  if (!o.config.empty()) {
    // Only the evaluation sections of an explicit config apply.
    const RunConfig over = load_run_config(o.config);
    cfg.fusion = over.fusion;
    cfg.fpr_limits = over.fpr_limits;
    cfg.prompts = over.prompts;
    cfg.known_classes = over.known_classes;
  }
  if (!o.limits.empty()) cfg.fpr_limits = o.limits;
  validate(cfg);
  const Head head = restore_head(ckpt);
  check_dims(cfg, read_manifest(o.data));
  const LoadedDataset data = read_dataset(o.data);

  EvalOptions opts;
  opts.fusion = cfg.fusion;
  opts.fpr_limits = cfg.fpr_limits;
  opts.prompts = cfg.prompts;
  opts.known_classes = cfg.known_classes;
  const std::vector<SampleMaps> maps = score_samples(head, data.test, opts);
  MetricsReport report = compute_metrics(data.test, maps, cfg.fpr_limits);
  report.config_hash = config_hash(cfg);
  report.seed = cfg.seed;
  write_file(o.out, report_json(report));

  char line[256];
  std::string header = "class            I-AUROC  P-AUROC";
  for (double l : report.fpr_limits) {
    std::snprintf(line, sizeof line, "  %9s", aupro_label(l).c_str());
    header += line;
  }
  out << header << "\n";
  auto print_row = [&](const ClassMetrics& c) {
    std::snprintf(line, sizeof line, "%-16s %8.4f %8.4f", c.class_name.c_str(), c.i_auroc, c.p_auroc);
    std::string row = line;
    for (double a : c.aupro) {
      std::snprintf(line, sizeof line, "  %9.4f", a);
      row += line;
    }
    out << row << "\n";
  };
  for (const auto& c : report.classes) print_row(c);
  print_row(report.average);
  out << "report " << o.out << " (config " << report.config_hash << ")\n";
  if (o.oracle_check) oracle_check(report, data.test, maps, out);
  return kOk;
}

std::string pgm_bytes(const AnomalyMap& map, const std::string& hash) {
  double hi = 0.0;
  for (double v : map.values) hi = std::max(hi, v);
  std::string s = "P5\n# config_hash " + hash + "\n" + std::to_string(map.width) + " " +
                  std::to_string(map.height) + "\n255\n";
  for (double v : map.values) {
    const double scaled = hi > 0.0 ? v / hi * 255.0 : 0.0;
    s.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
  }
  return s;
}

int infer_cmd(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const RunConfig& cfg = ckpt.config;
  const Head head = restore_head(ckpt);

  const fs::path sample_path(o.data);
  std::string class_name = o.class_name;
  bool is_anomalous = false;
  if (class_name.empty()) {
    const fs::path root = sample_path.parent_path().parent_path();
    const Manifest m = read_manifest(root);
    const std::string rel =
        (sample_path.parent_path().filename() / sample_path.filename()).generic_string();
    const ManifestEntry* e = find_entry(m, rel);
    if (e == nullptr) {
      throw IoError("no manifest entry for " + rel + "; pass --class");
    }
    class_name = e->class_name;
    is_anomalous = e->is_anomalous;
  }
  check_known(cfg, class_name);
  const LabeledSample s = read_sample(sample_path, class_name, is_anomalous);
  const TextAnchor anchor = class_anchor(head, class_name, cfg.prompts);
  const SampleMaps maps = score_sample(head, s.f_rgb, s.f_3d, s.mask, anchor, cfg.fusion);

  Tensor map_tensor({maps.final_map.height, maps.final_map.width}, maps.final_map.values);
  save_tmf(o.out, map_tensor, DType::kF32);
  const std::string hash = config_hash(cfg);
  const json sidecar = {{"class", class_name},           {"config_hash", hash},
                        {"height", maps.final_map.height}, {"width", maps.final_map.width},
                        {"score", maps.score}};
  write_file(o.out + ".json", sidecar.dump(2) + "\n");
  if (!o.pgm.empty()) write_file(o.pgm, pgm_bytes(maps.final_map, hash));
  out << "score " << fmt("%.17g", maps.score) << "\n";
  return kOk;
}

int gradcheck_cmd(const Options& o, std::ostream& out) {
  const RunConfig cfg = load_config(o);
  const GradCheckReport report = run_gradcheck(cfg.gradcheck);
  const bool passed = report.max_relative_error <= cfg.gradcheck.tolerance;
  for (const auto& [name, e] : report.per_parameter_errors) {
    out << fmt("%.3e", e) << "  " << name << "\n";
  }
  out << "max relative error " << fmt("%.3e", report.max_relative_error) << " ("
      << report.worst_parameter << "), tolerance " << fmt("%.1e", cfg.gradcheck.tolerance)
      << ": " << (passed ? "PASS" : "FAIL") << "\n";
  if (!o.out.empty()) {
    const json doc = {{"config_hash", config_hash(cfg)},
                      {"seed", cfg.seed},
                      {"epsilon", cfg.gradcheck.epsilon},
                      {"tolerance", cfg.gradcheck.tolerance},
                      {"max_relative_error", report.max_relative_error},
                      {"worst_parameter", report.worst_parameter},
                      {"per_parameter_errors", report.per_parameter_errors},
                      {"coordinates_checked", report.coordinates_checked},
                      {"passed", passed}};
    write_file(o.out, doc.dump(2) + "\n");
  }
  return passed ? kOk : kValidationError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-guided RGB/3D anomaly detection head"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic benchmark");
  gen->add_option("--config", o.config, "Run config (JSON)");
  gen->add_option("--out", o.out, "Output dataset directory")->required();
  gen->add_option("--seed", o.seed, "Overrides the config seed");

  auto* tr = app.add_subcommand("train", "Train a head on a dataset directory");
  tr->add_option("--config", o.config, "Run config (JSON)");
  tr->add_option("--data", o.data, "Dataset directory")->required();
  tr->add_option("--out", o.out, "Checkpoint path; the loss log goes to <out>.loss.jsonl")->required();
  tr->add_option("--seed", o.seed, "Overrides the config seed");

  auto* ev = app.add_subcommand("eval", "Score the test split and write a metrics report");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  ev->add_option("--data", o.data, "Dataset directory")->required();
  ev->add_option("--out", o.out, "Report path (JSON)")->required();
  ev->add_option("--config", o.config, "Overrides fusion, metrics and prompts sections");
  ev->add_option("--limit", o.limits, "FPR integration limit (repeatable)");
  ev->add_flag("--oracle-check", o.oracle_check, "Recompute metrics with brute-force oracles");

  auto* inf = app.add_subcommand("infer", "Anomaly map and score for one sample file");
  inf->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  inf->add_option("--data", o.data, "Sample file (.tmf)")->required();
  inf->add_option("--out", o.out, "Map path (TMF1, f32); metadata goes to <out>.json")->required();
  inf->add_option("--class", o.class_name, "Class name (default: from the dataset manifest)");
  inf->add_option("--pgm", o.pgm, "Also write an 8-bit PGM rendering");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  gc->add_option("--config", o.config, "Run config (JSON)");
  gc->add_option("--seed", o.seed, "Overrides the config seed");
  gc->add_option("--out", o.out, "Optional JSON report");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (gen->parsed()) return gen_data(o, out);
    if (tr->parsed()) return train_cmd(o, out);
    if (ev->parsed()) return eval_cmd(o, out);
    if (inf->parsed()) return infer_cmd(o, out);
    if (gc->parsed()) return gradcheck_cmd(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace gtad::cli
