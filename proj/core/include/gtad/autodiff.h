#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gtad/ops.h"
#include "gtad/params.h"
#include "gtad/tensor.h"

namespace gtad {

struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode tape. Values are recorded in evaluation order; backward()
// walks the nodes in reverse and calls each node's analytic rule with the
// accumulated upstream gradient. Nodes that do not depend on any parameter
// carry no backward rule and are skipped.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& upstream)>;

  Var constant(Tensor value);
  // Leaf bound to a store entry; repeated calls with the same id return the
  // same variable.
  Var param(const ParameterStore& store, ParamId id);

  // Records a node. `backward` is dropped when no input requires gradients.
  Var push(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var push(Tensor value, std::span<const Var> inputs, Backward backward);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  // Zeros when nothing flowed into `v`.
  Tensor grad(Var v) const;

  // Adds `contribution` into the gradient slot of `v` (no-op for constants).
  void accumulate(Var v, const Tensor& contribution);
  // Direct access to the gradient slot of `v`, allocated on first use.
  Tensor& grad_slot(Var v);

  // Seeds d(out)/d(out) = 1. `out` must hold a single element.
  void backward(Var out);
  // Adds leaf gradients into the store's gradient slots.
  void accumulate_param_grads(ParameterStore& store) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::optional<ParamId> param;
    Backward backward;
  };
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, std::size_t> param_nodes_;
};

// Differentiable operations. Shapes follow the value-level kernels in ops.h.
namespace ad {

Var linear(Tape& t, Var x, Var weight, std::optional<Var> bias);
Var linear(Tape& t, const ParameterStore& store, const LinearParams& p, Var x);
Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps = kLayerNormEps);
Var layer_norm(Tape& t, const ParameterStore& store, const LayerNormParams& p,
               Var x);
Var gelu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var softmax_rows(Tape& t, Var x);
Var matmul(Tape& t, Var a, Var b);
Var matmul_bt(Tape& t, Var a, Var b);

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
// 1 - a.
Var one_minus(Tape& t, Var a);
// Adds a row vector (any tensor with `a.cols()` elements) to every row of a.
Var add_row(Tape& t, Var a, Var row);
// Elementwise product with a constant tensor of the same shape.
Var mul_const(Tape& t, Var a, const Tensor& factor);

// Row-wise top-k gate: keeps the k largest logits per row (ties resolved
// towards the lower column index), softmax over them, zero elsewhere.
struct TopK {
  Var weights;
  // Selected column indices per row, in selection order.
  std::vector<std::vector<std::size_t>> selected;
};
TopK topk_softmax(Tape& t, Var logits, std::size_t k);

// out[r, :] = gates[r, column] * x[r, :].
Var scale_rows(Tape& t, Var x, Var gates, std::size_t column);

// Mean over valid rows of (1 - cos(pred_r, target_r)). `target` has either
// the same row count as `pred` or a single row that is broadcast. `valid`
// has one entry per row of pred. Returns a one-element tensor; zero when no
// row is valid.
Var masked_cosine_distance(Tape& t, Var pred, Var target,
                           std::span<const std::uint8_t> valid,
                           double eps = kCosineEps);

}  // namespace ad
}  // namespace gtad
