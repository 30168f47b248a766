#pragma once

#include <span>

#include "gtad/tensor.h"

namespace gtad {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kCosineEps = 1e-8;

// Forward kernels. Every kernel works along the trailing axis and keeps the
// leading extents of its input. These are the value-level entry points; the
// differentiable versions in autodiff.h call into them.

// y = x W + b. `bias` may be empty for bias-free layers.
Tensor linear_forward(const Tensor& x, const Tensor& weight,
                      const Tensor& bias);

// Per-vector normalization along the last axis, then gain/shift.
// Requires a trailing extent >= 2.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                  double eps = kLayerNormEps);

// Exact x * Phi(x) with Phi the standard normal CDF.
double gelu(double x);
double gelu_derivative(double x);
Tensor gelu(const Tensor& x);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);

// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);

// a.b / (max(|a|,eps) * max(|b|,eps)).
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         double eps = kCosineEps);

double euclidean_distance(std::span<const double> x, std::span<const double> y);

// (rows x k) . (k x n). Leading extents of `a` are kept.
Tensor matmul(const Tensor& a, const Tensor& b);
// a . b^T with b given as (n x k).
Tensor matmul_bt(const Tensor& a, const Tensor& b);

}  // namespace gtad
