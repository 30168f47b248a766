#include "gtad/config.h"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <set>

#include "gtad/error.h"
#include "gtad/rng.h"
#include "json.hpp"

namespace gtad {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  template <std::unsigned_integral T>
  void get(const char* key, T& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(at(key) + ": expected a nonnegative integer");
      out = v->get<T>();
    }
  }
  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(at(key) + ": expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(at(key) + ": must be finite");
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(at(key) + ": expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(at(key) + ": expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(at(key) + ": expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(at(key) + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  // Nested section; nullptr when absent.
  const json* sub(const char* key) { return find(key); }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.contains(key)) throw ConfigError("unknown config key '" + at(key.c_str()) + "'");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  const json* find(const char* key) {
    known_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

MapperKind parse_mapper(const std::string& s, const std::string& where) {
  if (s == "gacm") return MapperKind::kGacm;
  if (s == "mlp") return MapperKind::kMlp;
  throw ConfigError(where + ": expected \"gacm\" or \"mlp\", got \"" + s + "\"");
}

std::string mapper_name(MapperKind m) { return m == MapperKind::kGacm ? "gacm" : "mlp"; }

void read_prompts(Section& s, PromptCatalog& catalog, std::vector<std::string>& classes) {
  s.get("states", catalog.states);
  s.get("templates", catalog.templates);
  s.get("classes", classes);
  s.finish();
}

json prompts_json(const PromptCatalog& c) {
  return json{{"states", c.states}, {"templates", c.templates}};
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  RunConfig cfg;
  Section top(root, "");
  std::uint64_t seed = cfg.seed;
  top.get("seed", seed);
  cfg.set_seed(seed);

  if (const json* j = top.sub("data")) {
    Section s(*j, "data");
    SynthConfig& d = cfg.data;
    s.get("classes", d.classes);
    s.get("n_train_per_class", d.n_train_per_class);
    s.get("n_test_per_class", d.n_test_per_class);
    s.get("height", d.height);
    s.get("width", d.width);
    s.get("d_latent", d.d_latent);
    s.get("d_rgb", d.d_rgb);
    s.get("d_3d", d.d_3d);
    s.get("smoothness", d.smoothness);
    s.get("noise_sigma", d.noise_sigma);
    s.get("border", d.border);
    s.get("area_frac_min", d.area_frac_min);
    s.get("area_frac_max", d.area_frac_max);
    std::string corruption = d.corruption == Corruption::kGeometry ? "geometry" : "appearance";
    s.get("corruption", corruption);
    if (corruption == "geometry") {
      d.corruption = Corruption::kGeometry;
    } else if (corruption == "appearance") {
      d.corruption = Corruption::kAppearance;
    } else {
      throw ConfigError("data.corruption: expected \"geometry\" or \"appearance\"");
    }
    s.finish();
  }
  if (const json* j = top.sub("model")) {
    Section s(*j, "model");
    s.get("d_text", cfg.model.d_text);
    s.get("experts", cfg.model.experts);
    s.get("top_k", cfg.model.top_k);
    s.get("dropout_rate", cfg.model.dropout_rate);
    s.get("text_seed", cfg.model.text_seed);
    std::string mapper = mapper_name(cfg.model.mapper);
    s.get("mapper", mapper);
    cfg.model.mapper = parse_mapper(mapper, "model.mapper");
    s.finish();
  }
  if (const json* j = top.sub("train")) {
    Section s(*j, "train");
    TrainConfig& t = cfg.train;
    s.get("steps", t.steps);
    s.get("batch_size", t.batch_size);
    s.get("learning_rate", t.learning_rate);
    s.get("adam_beta1", t.adam_beta1);
    s.get("adam_beta2", t.adam_beta2);
    s.get("adam_eps", t.adam_eps);
    if (const json* w = s.sub("loss_weights")) {
      Section lw(*w, "train.loss_weights");
      lw.get("v2g", t.weights.v2g);
      lw.get("g2v", t.weights.g2v);
      lw.get("v2t", t.weights.v2t);
      lw.get("g2t", t.weights.g2t);
      lw.finish();
    }
    s.finish();
  }
  if (const json* j = top.sub("fusion")) {
    Section s(*j, "fusion");
    s.get("alpha", cfg.fusion.alpha);
    s.get("beta", cfg.fusion.beta);
    s.finish();
  }
  if (const json* j = top.sub("metrics")) {
    Section s(*j, "metrics");
    s.get("fpr_limits", cfg.fpr_limits);
    s.finish();
  }
  if (const json* j = top.sub("prompts")) {
    Section s(*j, "prompts");
    read_prompts(s, cfg.prompts, cfg.known_classes);
  }
  if (const json* j = top.sub("gradcheck")) {
    Section s(*j, "gradcheck");
    GradcheckConfig& g = cfg.gradcheck;
    s.get("height", g.height);
    s.get("width", g.width);
    s.get("d_rgb", g.d_rgb);
    s.get("d_3d", g.d_3d);
    s.get("d_text", g.d_text);
    s.get("experts", g.experts);
    s.get("top_k", g.top_k);
    s.get("classes", g.classes);
    s.get("epsilon", g.epsilon);
    s.get("tolerance", g.tolerance);
    std::string mapper = mapper_name(g.mapper);
    s.get("mapper", mapper);
    g.mapper = parse_mapper(mapper, "gradcheck.mapper");
    if (const json* p = s.sub("prompts")) {
      Section ps(*p, "gradcheck.prompts");
      ps.get("states", g.catalog.states);
      ps.get("templates", g.catalog.templates);
      ps.finish();
    }
    s.finish();
  }
  if (const json* j = top.sub("checkpoint")) {
    Section s(*j, "checkpoint");
    std::string dtype = cfg.checkpoint_dtype == DType::kF64 ? "f64" : "f32";
    s.get("dtype", dtype);
    if (dtype == "f64") {
      cfg.checkpoint_dtype = DType::kF64;
    } else if (dtype == "f32") {
      cfg.checkpoint_dtype = DType::kF32;
    } else {
      throw ConfigError("checkpoint.dtype: expected \"f32\" or \"f64\"");
    }
    s.finish();
  }
  top.finish();
  cfg.gradcheck.seed = cfg.seed;
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path));
}

ModelDims model_dims(const RunConfig& cfg) {
  ModelDims dims = cfg.model;
  dims.d_rgb = cfg.data.d_rgb;
  dims.d_3d = cfg.data.d_3d;
  return dims;
}

void validate(const RunConfig& cfg) {
  validate(cfg.data);
  validate(model_dims(cfg));
  validate(cfg.train);
  validate(cfg.fusion);
  if (cfg.fpr_limits.empty()) throw ConfigError("metrics.fpr_limits: need at least one limit");
  for (double l : cfg.fpr_limits) {
    if (!(l > 0.0 && l <= 1.0)) throw ConfigError("metrics.fpr_limits: each limit must lie in (0, 1]");
  }
  if (cfg.prompts.states.empty() || cfg.prompts.templates.empty()) {
    throw ConfigError("prompts: need at least one state and one template");
  }
  for (const auto& c : cfg.data.classes) {
    if (std::find(cfg.known_classes.begin(), cfg.known_classes.end(), c) ==
        cfg.known_classes.end()) {
      throw ConfigError("data.classes: class '" + c + "' is not in prompts.classes");
    }
  }
}

std::string to_json(const RunConfig& cfg) {
  const SynthConfig& d = cfg.data;
  const TrainConfig& t = cfg.train;
  const GradcheckConfig& g = cfg.gradcheck;
  json j;
  j["seed"] = cfg.seed;
  j["data"] = {{"classes", d.classes},
               {"n_train_per_class", d.n_train_per_class},
               {"n_test_per_class", d.n_test_per_class},
               {"height", d.height},
               {"width", d.width},
               {"d_latent", d.d_latent},
               {"d_rgb", d.d_rgb},
               {"d_3d", d.d_3d},
               {"smoothness", d.smoothness},
               {"noise_sigma", d.noise_sigma},
               {"border", d.border},
               {"area_frac_min", d.area_frac_min},
               {"area_frac_max", d.area_frac_max},
               {"corruption", d.corruption == Corruption::kGeometry ? "geometry" : "appearance"}};
  j["model"] = {{"d_text", cfg.model.d_text},
                {"experts", cfg.model.experts},
                {"top_k", cfg.model.top_k},
                {"dropout_rate", cfg.model.dropout_rate},
                {"text_seed", cfg.model.text_seed},
                {"mapper", mapper_name(cfg.model.mapper)}};
  j["train"] = {{"steps", t.steps},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},
                {"loss_weights",
                 {{"v2g", t.weights.v2g},
                  {"g2v", t.weights.g2v},
                  {"v2t", t.weights.v2t},
                  {"g2t", t.weights.g2t}}}};
  j["fusion"] = {{"alpha", cfg.fusion.alpha}, {"beta", cfg.fusion.beta}};
  j["metrics"] = {{"fpr_limits", cfg.fpr_limits}};
  json prompts = prompts_json(cfg.prompts);
  prompts["classes"] = cfg.known_classes;
  j["prompts"] = prompts;
  j["gradcheck"] = {{"height", g.height},
                    {"width", g.width},
                    {"d_rgb", g.d_rgb},
                    {"d_3d", g.d_3d},
                    {"d_text", g.d_text},
                    {"experts", g.experts},
                    {"top_k", g.top_k},
                    {"classes", g.classes},
                    {"epsilon", g.epsilon},
                    {"tolerance", g.tolerance},
                    {"mapper", mapper_name(g.mapper)},
                    {"prompts", prompts_json(g.catalog)}};
  j["checkpoint"] = {{"dtype", cfg.checkpoint_dtype == DType::kF64 ? "f64" : "f32"}};
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(cfg))));
  return buf;
}

}  // namespace gtad
