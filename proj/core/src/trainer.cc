#include "gtad/trainer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gtad/error.h"
#include "gtad/rng.h"

namespace gtad {

namespace {

enum SeedTag : std::uint64_t {
  kTagInit = 11,
  kTagShuffle = 12,
  kTagDropout = 13,
  kTagGradcheck = 14,
};

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw ConfigError("train.batch_size: must be positive");
  if (!(std::isfinite(cfg.learning_rate) && cfg.learning_rate >= 0.0)) {
    throw ConfigError("train.learning_rate: must be finite and >= 0");
  }
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) {
    throw ConfigError("train.adam_beta1/adam_beta2: must lie in [0, 1)");
  }
  if (!finite_positive(cfg.adam_eps)) throw ConfigError("train.adam_eps: must be > 0");
  validate(cfg.weights);
}

AdamState AdamState::zeros_for(const ParameterStore& store) {
  AdamState s;
  for (const auto& e : store.entries()) {
    s.m.push_back(Tensor::zeros_like(e.value));
    s.v.push_back(Tensor::zeros_like(e.value));
  }
  return s;
}

namespace {

// Anchors are built once per distinct class in the batch, in order of first
// appearance, so dropout masks are drawn in a fixed order.
template <typename Fn>
BatchLoss run_batch(Tape& t, const Head& head,
                    std::span<const LabeledSample* const> batch,
                    const PromptCatalog& catalog, const LossWeights& weights,
                    Mode mode, Rng* dropout_rng, Fn&& on_total) {
  if (batch.empty()) throw ValidationError("empty training batch");
  std::vector<std::pair<std::string, Var>> anchors;
  BatchLoss out;
  std::optional<Var> total;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const LabeledSample* s : batch) {
    if (s->is_anomalous || s->gt.any()) {
      throw ValidationError("anomalous sample of class '" + s->class_name +
                            "' in a training batch");
    }
    auto it = std::find_if(anchors.begin(), anchors.end(),
                           [&](const auto& a) { return a.first == s->class_name; });
    if (it == anchors.end()) {
      anchors.emplace_back(s->class_name,
                           ad::class_anchor(t, head, s->class_name, catalog, mode,
                                            dropout_rng));
      it = anchors.end() - 1;
    }
    const ad::SampleLoss l = ad::sample_loss(t, head, *s, it->second, weights);
    out.l_vis += t.value(l.l_vis)[0] * inv;
    out.l_text += t.value(l.l_text)[0] * inv;
    if (!s->mask.any()) ++out.empty_masks;
    Var scaled = ad::scale(t, l.l_total, inv);
    total = total ? ad::add(t, *total, scaled) : scaled;
  }
  out.l_total = t.value(*total)[0];
  on_total(*total);
  return out;
}

}  // namespace

BatchLoss accumulate_gradients(Head& head,
                               std::span<const LabeledSample* const> batch,
                               const PromptCatalog& catalog,
                               const LossWeights& weights, Mode mode,
                               Rng* dropout_rng) {
  head.store().zero_grads();
  Tape t;
  return run_batch(t, head, batch, catalog, weights, mode, dropout_rng,
                   [&](Var total) {
                     t.backward(total);
                     t.accumulate_param_grads(head.store());
                   });
}

BatchLoss evaluate_loss(const Head& head,
                        std::span<const LabeledSample* const> batch,
                        const PromptCatalog& catalog, const LossWeights& weights) {
  Tape t;
  return run_batch(t, head, batch, catalog, weights, Mode::kEval, nullptr,
                   [](Var) {});
}

std::vector<std::string> filter_nonfinite(ParameterStore& store) {
  std::vector<std::string> zeroed;
  for (auto& e : store.entries()) {
    if (!e.grad.all_finite()) {
      e.grad.fill(0.0);
      zeroed.push_back(e.name);
    }
  }
  return zeroed;
}

void adam_update(ParameterStore& store, AdamState& state, const TrainConfig& cfg) {
  if (state.m.size() != store.size()) {
    throw DimensionError("optimizer state does not match the parameter store");
  }
  ++state.t;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  auto entries = store.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& w = entries[i].value;
    const Tensor& g = entries[i].grad;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

StepResult train_step(Head& head, AdamState& state,
                      std::span<const LabeledSample* const> batch,
                      const TrainConfig& cfg, const PromptCatalog& catalog,
                      Rng& dropout_rng) {
  StepResult r;
  r.loss = accumulate_gradients(head, batch, catalog, cfg.weights, Mode::kTrain,
                                &dropout_rng);
  r.filtered = filter_nonfinite(head.store());
  adam_update(head.store(), state, cfg);
  return r;
}

Head initial_head(const ModelDims& dims, std::uint64_t seed) {
  return Head(dims, derive_seed(seed, kTagInit));
}

TrainResult train(const TrainConfig& cfg, const ModelDims& dims,
                  std::span<const LabeledSample> train_set,
                  const PromptCatalog& catalog) {
  validate(cfg);
  if (train_set.empty()) throw ValidationError("training set is empty");
  TrainResult result{initial_head(dims, cfg.seed), {}, 0, {}};
  AdamState state = AdamState::zeros_for(result.head.store());
  Rng shuffle(derive_seed(cfg.seed, kTagShuffle));
  Rng dropout(derive_seed(cfg.seed, kTagDropout));

  std::vector<std::size_t> order(train_set.size());
  std::size_t cursor = order.size();
  std::vector<const LabeledSample*> batch;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < std::min(cfg.batch_size, train_set.size())) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size() - 1; i > 0; --i) {
          std::swap(order[i], order[shuffle.below(i + 1)]);
        }
        cursor = 0;
      }
      batch.push_back(&train_set[order[cursor++]]);
    }
    StepResult r = train_step(result.head, state, batch, cfg, catalog, dropout);
    for (const auto& name : r.filtered) {
      result.filtered_log.push_back(std::to_string(step) + ":" + name);
    }
    result.log.push_back({step, r.loss.l_vis, r.loss.l_text, r.loss.l_total});
    result.steps = step;
  }
  return result;
}

std::vector<LabeledSample> gradcheck_batch(const GradcheckConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kTagGradcheck));
  std::vector<LabeledSample> out;
  for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
    LabeledSample s;
    s.class_name = cfg.classes[c];
    s.f_rgb = Tensor({cfg.height, cfg.width, cfg.d_rgb});
    s.f_3d = Tensor({cfg.height, cfg.width, cfg.d_3d});
    for (double& v : s.f_rgb.values()) v = rng.normal();
    for (double& v : s.f_3d.values()) v = rng.normal();
    s.mask = ValidityMask(cfg.height, cfg.width, true);
    if (s.mask.size() > 1) s.mask.set((c + 1) % s.mask.size(), false);
    s.gt = PixelMask(cfg.height, cfg.width, false);
    out.push_back(std::move(s));
  }
  return out;
}

GradCheckReport run_gradcheck(const GradcheckConfig& cfg) {
  ModelDims dims;
  dims.d_rgb = cfg.d_rgb;
  dims.d_3d = cfg.d_3d;
  dims.d_text = cfg.d_text;
  dims.experts = cfg.experts;
  dims.top_k = cfg.top_k;
  dims.mapper = cfg.mapper;
  dims.dropout_rate = 0.0;
  Head head = initial_head(dims, cfg.seed);
  const std::vector<LabeledSample> samples = gradcheck_batch(cfg);
  std::vector<const LabeledSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  // The check perturbs the head's own store, so the objective must read
  // parameters from the store handed to it, which is head.store().
  const LossWeights weights;
  Objective objective = [&](Tape& t, const ParameterStore&) {
    Var total;
    run_batch(t, head, batch, cfg.catalog, weights, Mode::kEval, nullptr,
              [&](Var v) { total = v; });
    return total;
  };
  return finite_diff_gradient_check(objective, head.store(), cfg.epsilon);
}

}  // namespace gtad
