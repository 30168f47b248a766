#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gtad/rng.h"
#include "gtad/tensor.h"

namespace gtad {

struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

// Ordered, named trainable tensors with paired gradient slots. Insertion
// order is the canonical order for checkpoints, optimizer state and
// gradient-check reports.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  ParamId add(std::string name, Tensor init);

  std::size_t size() const { return entries_.size(); }
  const std::string& name(ParamId id) const { return entries_[id.index].name; }
  Tensor& value(ParamId id) { return entries_[id.index].value; }
  const Tensor& value(ParamId id) const { return entries_[id.index].value; }
  Tensor& grad(ParamId id) { return entries_[id.index].grad; }
  const Tensor& grad(ParamId id) const { return entries_[id.index].grad; }

  std::optional<ParamId> find(std::string_view name) const;
  ParamId at(std::string_view name) const;

  std::span<Entry> entries() { return entries_; }
  std::span<const Entry> entries() const { return entries_; }

  void zero_grads();
  std::size_t parameter_count() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class LinearInit {
  kUniform,   // U(-1/sqrt(in), 1/sqrt(in)), zero bias
  kUnitGain,  // U(-sqrt(3/in), sqrt(3/in)): unit weight variance x fan-in, zero bias
  kZero,
  kIdentity,  // identity, zero-padded when non-square, zero bias
};

// Dense layer y = x W + b, W stored in x out.
struct LinearParams {
  ParamId weight;
  std::optional<ParamId> bias;
  std::size_t in = 0;
  std::size_t out = 0;
};

LinearParams make_linear(ParameterStore& store, const std::string& name,
                         std::size_t in, std::size_t out, LinearInit init,
                         Rng& rng, bool with_bias = true);

struct LayerNormParams {
  ParamId gain;
  ParamId shift;
  std::size_t width = 0;
};

// Gain 1, shift 0.
LayerNormParams make_layer_norm(ParameterStore& store, const std::string& name,
                                std::size_t width);

// Value-level evaluation against the current store contents.
Tensor apply(const ParameterStore& store, const LinearParams& p,
             const Tensor& x);
Tensor apply(const ParameterStore& store, const LayerNormParams& p,
             const Tensor& x);

}  // namespace gtad
