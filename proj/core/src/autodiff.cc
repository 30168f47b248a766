#include "gtad/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gtad/error.h"

namespace gtad {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, std::nullopt, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::param(const ParameterStore& store, ParamId id) {
  if (auto it = param_nodes_.find(id.index); it != param_nodes_.end()) {
    return Var{it->second};
  }
  nodes_.push_back(Node{store.value(id), Tensor(), true, id, {}});
  param_nodes_.emplace(id.index, nodes_.size() - 1);
  return Var{nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs,
               Backward backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Tape::push(Tensor value, std::span<const Var> inputs, Backward backward) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [&](Var v) {
    return nodes_[v.id].requires_grad;
  });
  Node node{std::move(value), Tensor(), needs, std::nullopt, {}};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor::zeros_like(n.value);
  return n.grad;
}

Tensor& Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& contribution) {
  if (!nodes_[v.id].requires_grad) return;
  Tensor& g = grad_slot(v);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += contribution[i];
}

void Tape::backward(Var out) {
  if (nodes_[out.id].value.size() != 1) {
    throw DimensionError("backward: output must be a single element, got " +
                         shape_string(nodes_[out.id].value.shape()));
  }
  if (!nodes_[out.id].requires_grad) return;
  grad_slot(out)[0] += 1.0;
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, n.grad);
  }
}

void Tape::accumulate_param_grads(ParameterStore& store) const {
  for (const Node& n : nodes_) {
    if (!n.param || n.grad.empty()) continue;
    Tensor& g = store.grad(*n.param);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  }
}

namespace ad {

namespace {

bool needs(const Tape& t, Var v) { return t.requires_grad(v); }

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  Tensor y = gtad::matmul(t.value(a), t.value(b));
  return t.push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
    if (needs(t, a)) {
      Tensor& ga = t.grad_slot(a);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g[r * m + j] * bv[i * m + j];
          ga[r * k + i] += s;
        }
      }
    }
    if (needs(t, b)) {
      Tensor& gb = t.grad_slot(b);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
          const double av_ri = av[r * k + i];
          for (std::size_t j = 0; j < m; ++j) gb[i * m + j] += av_ri * g[r * m + j];
        }
      }
    }
  });
}

Var matmul_bt(Tape& t, Var a, Var b) {
  Tensor y = gtad::matmul_bt(t.value(a), t.value(b));
  return t.push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const std::size_t n = av.rows(), k = av.cols(), m = bv.rows();
    // y[r,j] = sum_i a[r,i] b[j,i]
    if (needs(t, a)) {
      Tensor& ga = t.grad_slot(a);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < m; ++j) {
          const double gv = g[r * m + j];
          for (std::size_t i = 0; i < k; ++i) ga[r * k + i] += gv * bv[j * k + i];
        }
      }
    }
    if (needs(t, b)) {
      Tensor& gb = t.grad_slot(b);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < m; ++j) {
          const double gv = g[r * m + j];
          for (std::size_t i = 0; i < k; ++i) gb[j * k + i] += gv * av[r * k + i];
        }
      }
    }
  });
}

Var linear(Tape& t, Var x, Var weight, std::optional<Var> bias) {
  Var y = matmul(t, x, weight);
  if (bias) y = add_row(t, y, *bias);
  return y;
}

Var linear(Tape& t, const ParameterStore& store, const LinearParams& p, Var x) {
  if (t.value(x).cols() != p.in) {
    throw DimensionError("linear: input width " +
                         std::to_string(t.value(x).cols()) +
                         " does not match layer input width " +
                         std::to_string(p.in));
  }
  std::optional<Var> b;
  if (p.bias) b = t.param(store, *p.bias);
  return linear(t, x, t.param(store, p.weight), b);
}

Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps) {
  Tensor y = gtad::layer_norm(t.value(x), t.value(gain), t.value(shift), eps);
  return t.push(std::move(y), {x, gain, shift},
                [x, gain, shift, eps](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& gv = t.value(gain);
    const std::size_t d = xv.cols();
    const double dn = static_cast<double>(d);
    std::vector<double> xhat(d), ghat(d);
    Tensor* gx = needs(t, x) ? &t.grad_slot(x) : nullptr;
    Tensor* gg = needs(t, gain) ? &t.grad_slot(gain) : nullptr;
    Tensor* gs = needs(t, shift) ? &t.grad_slot(shift) : nullptr;
    for (std::size_t r = 0; r < xv.rows(); ++r) {
      auto in = xv.row_span(r);
      double mean = 0.0;
      for (double v : in) mean += v;
      mean /= dn;
      double var = 0.0;
      for (double v : in) var += (v - mean) * (v - mean);
      var /= dn;
      const double inv = 1.0 / std::sqrt(var + eps);
      double mean_g = 0.0, mean_gx = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        xhat[j] = (in[j] - mean) * inv;
        const double up = g[r * d + j];
        ghat[j] = up * gv[j];
        mean_g += ghat[j];
        mean_gx += ghat[j] * xhat[j];
        if (gg) (*gg)[j] += up * xhat[j];
        if (gs) (*gs)[j] += up;
      }
      mean_g /= dn;
      mean_gx /= dn;
      if (gx) {
        for (std::size_t j = 0; j < d; ++j) {
          (*gx)[r * d + j] += inv * (ghat[j] - mean_g - xhat[j] * mean_gx);
        }
      }
    }
  });
}

Var layer_norm(Tape& t, const ParameterStore& store, const LayerNormParams& p,
               Var x) {
  return layer_norm(t, x, t.param(store, p.gain), t.param(store, p.shift));
}

Var gelu(Tape& t, Var x) {
  return t.push(gtad::gelu(t.value(x)), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    Tensor& gx = t.grad_slot(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      gx[i] += g[i] * gelu_derivative(xv[i]);
    }
  });
}

Var sigmoid(Tape& t, Var x) {
  Tensor y = gtad::sigmoid(t.value(x));
  Tensor y_copy = y;
  return t.push(std::move(y), {x},
                [x, s = std::move(y_copy)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_slot(x);
    for (std::size_t i = 0; i < s.size(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var softmax_rows(Tape& t, Var x) {
  Tensor y = gtad::softmax_rows(t.value(x));
  Tensor y_copy = y;
  return t.push(std::move(y), {x},
                [x, s = std::move(y_copy)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_slot(x);
    const std::size_t n = s.cols();
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * s[r * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        gx[r * n + j] += s[r * n + j] * (g[r * n + j] - dot);
      }
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return t.push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "sub");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return t.push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (needs(t, b)) {
      Tensor& gb = t.grad_slot(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "mul");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return t.push(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (needs(t, a)) {
      Tensor& ga = t.grad_slot(a);
      const Tensor& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (needs(t, b)) {
      Tensor& gb = t.grad_slot(b);
      const Tensor& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor y = t.value(a);
  for (double& v : y.values()) v *= s;
  return t.push(std::move(y), {a}, [a, s](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

Var one_minus(Tape& t, Var a) {
  Tensor y = t.value(a);
  for (double& v : y.values()) v = 1.0 - v;
  return t.push(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

Var add_row(Tape& t, Var a, Var row) {
  const std::size_t m = t.value(a).cols();
  if (t.value(row).size() != m) {
    throw DimensionError("add_row: row width " +
                         std::to_string(t.value(row).size()) +
                         " does not match " + std::to_string(m));
  }
  Tensor y = t.value(a);
  const Tensor& rv = t.value(row);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t j = 0; j < m; ++j) y[r * m + j] += rv[j];
  }
  return t.push(std::move(y), {a, row}, [a, row, m](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (needs(t, row)) {
      Tensor& gr = t.grad_slot(row);
      const std::size_t rows = g.size() / m;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < m; ++j) gr[j] += g[r * m + j];
      }
    }
  });
}

Var mul_const(Tape& t, Var a, const Tensor& factor) {
  require_same_shape(t.value(a), factor, "mul_const");
  Tensor y = t.value(a);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= factor[i];
  return t.push(std::move(y), {a}, [a, factor](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor[i];
  });
}

TopK topk_softmax(Tape& t, Var logits, std::size_t k) {
  const Tensor& lv = t.value(logits);
  const std::size_t e = lv.cols();
  if (k == 0 || k > e) {
    throw DimensionError("topk_softmax: k=" + std::to_string(k) +
                         " must be in [1, " + std::to_string(e) + "]");
  }
  TopK out;
  out.selected.resize(lv.rows());
  Tensor w(lv.shape());
  std::vector<std::size_t> order(e);
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return lv.at(r, i) > lv.at(r, j);
    });
    auto& sel = out.selected[r];
    sel.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    double mx = lv.at(r, sel.front());
    double sum = 0.0;
    for (std::size_t c : sel) {
      w.at(r, c) = std::exp(lv.at(r, c) - mx);
      sum += w.at(r, c);
    }
    for (std::size_t c : sel) w.at(r, c) /= sum;
  }
  Tensor w_copy = w;
  out.weights = t.push(
      std::move(w), {logits},
      [logits, s = std::move(w_copy), sel = out.selected](Tape& t,
                                                           const Tensor& g) {
        Tensor& gl = t.grad_slot(logits);
        const std::size_t e = s.cols();
        for (std::size_t r = 0; r < sel.size(); ++r) {
          double dot = 0.0;
          for (std::size_t c : sel[r]) dot += g[r * e + c] * s[r * e + c];
          for (std::size_t c : sel[r]) {
            gl[r * e + c] += s[r * e + c] * (g[r * e + c] - dot);
          }
        }
      });
  return out;
}

Var scale_rows(Tape& t, Var x, Var gates, std::size_t column) {
  const Tensor& xv = t.value(x);
  const Tensor& gv = t.value(gates);
  if (gv.rows() != xv.rows() || column >= gv.cols()) {
    throw DimensionError("scale_rows: gate matrix " + shape_string(gv.shape()) +
                         " incompatible with " + shape_string(xv.shape()));
  }
  Tensor y = xv;
  const std::size_t d = xv.cols(), e = gv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const double s = gv[r * e + column];
    for (std::size_t j = 0; j < d; ++j) y[r * d + j] *= s;
  }
  return t.push(std::move(y), {x, gates},
                [x, gates, column](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& gv = t.value(gates);
    const std::size_t d = xv.cols(), e = gv.cols();
    Tensor* gx = needs(t, x) ? &t.grad_slot(x) : nullptr;
    Tensor* gg = needs(t, gates) ? &t.grad_slot(gates) : nullptr;
    for (std::size_t r = 0; r < xv.rows(); ++r) {
      const double s = gv[r * e + column];
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        if (gx) (*gx)[r * d + j] += g[r * d + j] * s;
        dot += g[r * d + j] * xv[r * d + j];
      }
      if (gg) (*gg)[r * e + column] += dot;
    }
  });
}

Var masked_cosine_distance(Tape& t, Var pred, Var target,
                           std::span<const std::uint8_t> valid, double eps) {
  const Tensor& pv = t.value(pred);
  const Tensor& tv = t.value(target);
  const std::size_t n = pv.rows(), d = pv.cols();
  if (tv.cols() != d || (tv.rows() != n && tv.rows() != 1)) {
    throw DimensionError("masked_cosine_distance: target " +
                         shape_string(tv.shape()) + " incompatible with " +
                         shape_string(pv.shape()));
  }
  if (valid.size() != n) {
    throw DimensionError("masked_cosine_distance: mask has " +
                         std::to_string(valid.size()) + " entries for " +
                         std::to_string(n) + " patches");
  }
  const bool broadcast = tv.rows() == 1 && n != 1;
  const std::size_t count =
      static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(),
                                             [](std::uint8_t v) { return v != 0; }));
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!valid[r]) continue;
    total += 1.0 - cosine_similarity(pv.row_span(r),
                                     tv.row_span(broadcast ? 0 : r), eps);
  }
  const double value = count ? total / static_cast<double>(count) : 0.0;
  std::vector<std::uint8_t> mask(valid.begin(), valid.end());
  return t.push(
      Tensor({1}, value), {pred, target},
      [pred, target, mask = std::move(mask), count, broadcast, eps](
          Tape& t, const Tensor& g) {
        if (count == 0) return;
        const Tensor& pv = t.value(pred);
        const Tensor& tv = t.value(target);
        const std::size_t d = pv.cols();
        const double up = g[0] / static_cast<double>(count);
        Tensor* gp = needs(t, pred) ? &t.grad_slot(pred) : nullptr;
        Tensor* gt = needs(t, target) ? &t.grad_slot(target) : nullptr;
        for (std::size_t r = 0; r < mask.size(); ++r) {
          if (!mask[r]) continue;
          const std::size_t tr = broadcast ? 0 : r;
          const double* a = pv.values().data() + r * d;
          const double* b = tv.values().data() + tr * d;
          double dot = 0.0, sa = 0.0, sb = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dot += a[j] * b[j];
            sa += a[j] * a[j];
            sb += b[j] * b[j];
          }
          const double la = std::sqrt(sa), lb = std::sqrt(sb);
          const double na = std::max(la, eps), nb = std::max(lb, eps);
          const double c = dot / (na * nb);
          // d(1 - c) = -dc
          const double ka = la > eps ? c / (na * na) : 0.0;
          const double kb = lb > eps ? c / (nb * nb) : 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            if (gp) (*gp)[r * d + j] -= up * (b[j] / (na * nb) - ka * a[j]);
            if (gt) (*gt)[tr * d + j] -= up * (a[j] / (na * nb) - kb * b[j]);
          }
        }
      });
}

}  // namespace ad
}  // namespace gtad
