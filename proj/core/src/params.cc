#include "gtad/params.h"

#include <cmath>

#include "gtad/error.h"
#include "gtad/ops.h"

namespace gtad {

ParamId ParameterStore::add(std::string name, Tensor init) {
  if (index_.contains(name)) {
    throw ConfigError("duplicate parameter name '" + name + "'");
  }
  const ParamId id{entries_.size()};
  index_.emplace(name, id.index);
  Tensor grad = Tensor::zeros_like(init);
  entries_.push_back(Entry{std::move(name), std::move(init), std::move(grad)});
  return id;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return ParamId{it->second};
}

ParamId ParameterStore::at(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw ValidationError("unknown parameter '" + std::string(name) + "'");
}

void ParameterStore::zero_grads() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

LinearParams make_linear(ParameterStore& store, const std::string& name,
                         std::size_t in, std::size_t out, LinearInit init,
                         Rng& rng, bool with_bias) {
  Tensor w({in, out});
  switch (init) {
    case LinearInit::kUniform: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (double& v : w.values()) v = rng.uniform(-bound, bound);
      break;
    }
    case LinearInit::kUnitGain: {
      const double bound = std::sqrt(3.0 / static_cast<double>(in));
      for (double& v : w.values()) v = rng.uniform(-bound, bound);
      break;
    }
    case LinearInit::kZero:
      break;
    case LinearInit::kIdentity:
      for (std::size_t i = 0; i < std::min(in, out); ++i) w.at(i, i) = 1.0;
      break;
  }
  LinearParams p;
  p.in = in;
  p.out = out;
  p.weight = store.add(name + ".weight", std::move(w));
  if (with_bias) p.bias = store.add(name + ".bias", Tensor({out}));
  return p;
}

LayerNormParams make_layer_norm(ParameterStore& store, const std::string& name,
                                std::size_t width) {
  LayerNormParams p;
  p.width = width;
  p.gain = store.add(name + ".gain", Tensor({width}, 1.0));
  p.shift = store.add(name + ".shift", Tensor({width}));
  return p;
}

Tensor apply(const ParameterStore& store, const LinearParams& p,
             const Tensor& x) {
  return linear_forward(x, store.value(p.weight),
                        p.bias ? store.value(*p.bias) : Tensor());
}

Tensor apply(const ParameterStore& store, const LayerNormParams& p,
             const Tensor& x) {
  return layer_norm(x, store.value(p.gain), store.value(p.shift));
}

}  // namespace gtad
