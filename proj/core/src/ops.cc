#include "gtad/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gtad/error.h"

namespace gtad {

namespace {

Shape with_trailing(const Shape& shape, std::size_t cols) {
  Shape out = shape;
  out.back() = cols;
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.cols() != b.shape()[0]) {
    throw DimensionError("matmul: inner extent " + std::to_string(a.cols()) +
                         " does not match " + shape_string(b.shape()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out(with_trailing(a.shape(), m));
  for (std::size_t r = 0; r < n; ++r) {
    double* o = &out[r * m];
    for (std::size_t i = 0; i < k; ++i) {
      const double av = a[r * k + i];
      const double* brow = &b[i * m];
      for (std::size_t j = 0; j < m; ++j) o[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.cols() != b.cols()) {
    throw DimensionError("matmul_bt: extent " + std::to_string(a.cols()) +
                         " does not match " + shape_string(b.shape()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Tensor out(with_trailing(a.shape(), m));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += a[r * k + i] * b[j * k + i];
      out[r * m + j] = s;
    }
  }
  return out;
}

Tensor linear_forward(const Tensor& x, const Tensor& weight,
                      const Tensor& bias) {
  if (weight.rank() != 2 || x.cols() != weight.shape()[0]) {
    throw DimensionError("linear: input width " + std::to_string(x.cols()) +
                         " does not match layer input width " +
                         std::to_string(weight.rank() == 2 ? weight.shape()[0]
                                                           : 0));
  }
  Tensor y = matmul(x, weight);
  if (!bias.empty()) {
    if (bias.size() != weight.cols()) {
      throw DimensionError("linear: bias width " + std::to_string(bias.size()) +
                           " does not match output width " +
                           std::to_string(weight.cols()));
    }
    const std::size_t m = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      for (std::size_t j = 0; j < m; ++j) y[r * m + j] += bias[j];
    }
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                  double eps) {
  const std::size_t d = x.cols();
  if (d < 2) throw DimensionError("layer_norm: width must be >= 2");
  if (gain.size() != d || shift.size() != d) {
    throw DimensionError("layer_norm: gain/shift width " +
                         std::to_string(gain.size()) + " does not match " +
                         std::to_string(d));
  }
  Tensor y(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    auto out = y.row_span(r);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = (in[j] - mean) * inv * gain[j] + shift[j];
    }
  }
  return y;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * (0.5 * std::numbers::sqrt2)));
}

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * (0.5 * std::numbers::sqrt2)));
  const double pdf =
      std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi *
      std::numbers::sqrt2;
  return cdf + x * pdf;
}

Tensor gelu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = gelu(x[i]);
  return y;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
  return y;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor y(x.shape());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    auto out = y.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
  }
  return y;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         double eps) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity: extents " +
                         std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::max(std::sqrt(na), eps) * std::max(std::sqrt(nb), eps));
}

double euclidean_distance(std::span<const double> x,
                          std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("euclidean_distance: extents " +
                         std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace gtad
