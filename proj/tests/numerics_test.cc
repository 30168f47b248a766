#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gtad/autodiff.h"
#include "gtad/error.h"
#include "gtad/gradcheck.h"
#include "gtad/ops.h"
#include "test_support.h"

namespace gtad {
namespace {

using testing::random_tensor;

TEST(Linear, ZeroWeightGivesBiasRows) {
  Tensor x = Tensor::matrix({{1, 2, 3}, {-4, 5, 6}});
  Tensor y = linear_forward(x, Tensor({3, 2}, 0.0), Tensor::row({1, 2}));
  EXPECT_EQ(y, Tensor::matrix({{1, 2}, {1, 2}}));
}

TEST(Linear, IdentityWeight) {
  Tensor y = linear_forward(Tensor::row({3, -1}), Tensor::identity(2), Tensor::row({0, 0}));
  EXPECT_EQ(y, Tensor::row({3, -1}));
}

TEST(Linear, HandMultiply) {
  Tensor y = linear_forward(Tensor::row({1, 2}), Tensor::matrix({{1, 0}, {1, 1}}),
                            Tensor::row({0.5, 0}));
  EXPECT_DOUBLE_EQ(y[0], 3.5);
  EXPECT_DOUBLE_EQ(y[1], 2.0);
}

TEST(Linear, KeepsLeadingExtents) {
  Rng rng(1);
  Tensor y = linear_forward(random_tensor({2, 3, 4}, rng), random_tensor({4, 5}, rng), Tensor());
  EXPECT_EQ(y.shape(), (Shape{2, 3, 5}));
}

TEST(Linear, WidthMismatchNamesExtents) {
  try {
    linear_forward(Tensor({1, 3}), Tensor({2, 2}), Tensor());
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(LayerNorm, ConstantVectorGoesToZero) {
  Tensor y = layer_norm(Tensor::row({5, 5, 5, 5}), Tensor({4}, 1.0), Tensor({4}, 0.0));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, AlreadyNormalized) {
  Tensor y = layer_norm(Tensor::row({1, -1}), Tensor({2}, 1.0), Tensor({2}, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], -1.0);
}

TEST(LayerNorm, ShiftedExample) {
  Tensor y = layer_norm(Tensor::row({0, 2, 4}), Tensor({3}, 1.0), Tensor({3}, 1.0));
  EXPECT_NEAR(y[0], -0.2247425750014138, 1e-12);
  EXPECT_NEAR(y[1], 1.0, 1e-12);
  EXPECT_NEAR(y[2], 2.2247425750014136, 1e-12);
}

TEST(LayerNorm, RejectsWidthOne) {
  EXPECT_THROW(layer_norm(Tensor::row({1}), Tensor({1}, 1.0), Tensor({1}, 0.0)), Error);
}

TEST(Gelu, Values) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(gelu(40.0), 40.0, 1e-12);
  EXPECT_NEAR(gelu(-40.0), 0.0, 1e-12);
}

TEST(Gelu, MonotoneOnGrid) {
  // GELU dips below zero for x < 0, so monotonicity holds from its minimum
  // near -0.7518 upward.
  double prev = gelu(-0.75);
  for (double x = -0.75 + 1e-3; x < 8.0; x += 1e-3) {
    const double y = gelu(x);
    ASSERT_GE(y, prev) << x;
    prev = y;
  }
}

TEST(Softmax, Examples) {
  Tensor u = softmax_rows(Tensor::row({0, 0, 0}));
  for (double v : u.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  Tensor big = softmax_rows(Tensor::row({1000, 0}));
  EXPECT_EQ(big[0], 1.0);
  EXPECT_EQ(big[1], 0.0);
  Tensor s = softmax_rows(Tensor::row({1, 2}));
  EXPECT_NEAR(s[0], 0.2689414213699951, 1e-15);
  EXPECT_NEAR(s[1], 0.7310585786300049, 1e-15);
}

TEST(Softmax, RowsSumToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = testing::random_between(rng, 1, 6);
    const std::size_t cols = testing::random_between(rng, 1, 9);
    Tensor y = softmax_rows(random_tensor({rows, cols}, rng, rng.uniform(0.1, 300.0)));
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (double v : y.row_span(r)) sum += v;
      ASSERT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Cosine, Examples) {
  const std::vector<double> a{1, 0}, b{1, 1}, c{0, 3}, d{2, -7};
  EXPECT_NEAR(cosine_similarity(d, d), 1.0, 1e-15);
  EXPECT_EQ(cosine_similarity(a, c), 0.0);
  EXPECT_NEAR(cosine_similarity(a, b), 0.7071067811865475, 1e-15);
}

TEST(Cosine, ZeroVectorIsFinite) {
  const std::vector<double> z{0, 0}, a{1, 2};
  EXPECT_EQ(cosine_similarity(z, a), 0.0);
  EXPECT_EQ(cosine_similarity(z, z), 0.0);
}

TEST(Cosine, BoundedAndSymmetric) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = testing::random_between(rng, 1, 8);
    Tensor a = random_tensor({d}, rng, rng.uniform(1e-6, 1e6));
    Tensor b = random_tensor({d}, rng, rng.uniform(1e-6, 1e6));
    if (trial % 7 == 0) b = a;
    const double ab = cosine_similarity(a.values(), b.values());
    ASSERT_LE(ab, 1.0 + 1e-12);
    ASSERT_GE(ab, -1.0 - 1e-12);
    ASSERT_EQ(ab, cosine_similarity(b.values(), a.values()));
  }
}

TEST(Euclidean, Examples) {
  const std::vector<double> x{1, 1, 1}, y{2, 3, 4}, o{0, 0}, p{3, 4};
  EXPECT_EQ(euclidean_distance(x, x), 0.0);
  EXPECT_EQ(euclidean_distance(o, p), 5.0);
  EXPECT_NEAR(euclidean_distance(x, y), 3.7416573867739413, 1e-15);
  const std::vector<double> short_one{1.0};
  EXPECT_THROW(euclidean_distance(x, short_one), DimensionError);
}

TEST(Euclidean, TriangleInequality) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = testing::random_between(rng, 1, 8);
    Tensor a = random_tensor({d}, rng), b = random_tensor({d}, rng), c = random_tensor({d}, rng);
    ASSERT_LE(euclidean_distance(a.values(), c.values()),
              euclidean_distance(a.values(), b.values()) +
                  euclidean_distance(b.values(), c.values()) + 1e-9);
  }
}

// Inputs registered as store entries so the check differentiates through
// them as well.
GradCheckReport check_op(std::uint64_t seed,
                         const std::function<Var(Tape&, const ParameterStore&,
                                                 const std::vector<ParamId>&)>& op,
                         const std::vector<Shape>& shapes, double scale = 1.0) {
  Rng rng(seed);
  ParameterStore store;
  std::vector<ParamId> ids;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    ids.push_back(store.add("in" + std::to_string(i), random_tensor(shapes[i], rng, scale)));
  }
  // A random linear functional turns any output into a scalar.
  Tensor probe;
  Objective f = [&](Tape& t, const ParameterStore& s) {
    Var y = op(t, s, ids);
    const Tensor& yv = t.value(y);
    if (probe.empty()) {
      Rng prng(seed + 1000);
      probe = random_tensor(yv.shape(), prng);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < yv.size(); ++i) sum += probe[i] * yv[i];
    return t.push(Tensor({1}, sum), {y}, [y, p = probe](Tape& tt, const Tensor& g) {
      Tensor d = p;
      for (double& v : d.values()) v *= g[0];
      tt.accumulate(y, d);
    });
  };
  return finite_diff_gradient_check(f, store);
}

using Ids = std::vector<ParamId>;

class OpGradcheck : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(OpGradcheck, EveryOp) {
  const std::uint64_t seed = GetParam();
  struct Case {
    const char* name;
    std::function<Var(Tape&, const ParameterStore&, const Ids&)> op;
    std::vector<Shape> shapes;
  };
  const std::vector<Case> cases = {
      {"linear", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::linear(t, t.param(s, id[0]), t.param(s, id[1]), t.param(s, id[2]));
       }, {{2, 2, 3}, {3, 4}, {4}}},
      {"layer_norm", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::layer_norm(t, t.param(s, id[0]), t.param(s, id[1]), t.param(s, id[2]));
       }, {{3, 5}, {5}, {5}}},
      {"gelu", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::gelu(t, t.param(s, id[0]));
       }, {{3, 4}}},
      {"sigmoid", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::sigmoid(t, t.param(s, id[0]));
       }, {{3, 4}}},
      {"softmax", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::softmax_rows(t, t.param(s, id[0]));
       }, {{3, 6}}},
      {"matmul", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::matmul(t, t.param(s, id[0]), t.param(s, id[1]));
       }, {{3, 4}, {4, 2}}},
      {"matmul_bt", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::matmul_bt(t, t.param(s, id[0]), t.param(s, id[1]));
       }, {{3, 4}, {5, 4}}},
      {"add_sub_mul", [](Tape& t, const ParameterStore& s, const Ids& id) {
         Var a = t.param(s, id[0]), b = t.param(s, id[1]);
         return ad::mul(t, ad::add(t, a, b), ad::sub(t, ad::one_minus(t, a), ad::scale(t, b, 0.3)));
       }, {{2, 3}, {2, 3}}},
      {"add_row", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::add_row(t, t.param(s, id[0]), t.param(s, id[1]));
       }, {{2, 2, 3}, {1, 3}}},
      {"topk_softmax", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::topk_softmax(t, t.param(s, id[0]), 2).weights;
       }, {{4, 3}}},
      {"scale_rows", [](Tape& t, const ParameterStore& s, const Ids& id) {
         return ad::scale_rows(t, t.param(s, id[0]), t.param(s, id[1]), 1);
       }, {{4, 3}, {4, 2}}},
      {"masked_cosine", [](Tape& t, const ParameterStore& s, const Ids& id) {
         static const std::vector<std::uint8_t> valid{1, 0, 1, 1};
         return ad::masked_cosine_distance(t, t.param(s, id[0]), t.param(s, id[1]), valid);
       }, {{2, 2, 5}, {2, 2, 5}}},
      {"masked_cosine_broadcast", [](Tape& t, const ParameterStore& s, const Ids& id) {
         static const std::vector<std::uint8_t> valid{1, 1, 0, 1};
         return ad::masked_cosine_distance(t, t.param(s, id[0]), t.param(s, id[1]), valid);
       }, {{2, 2, 5}, {1, 5}}},
  };
  for (const Case& c : cases) {
    const GradCheckReport r = check_op(seed, c.op, c.shapes);
    EXPECT_LE(r.max_relative_error, 1e-4) << c.name << " worst " << r.worst_parameter;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradcheck, ::testing::Values(1, 2, 3, 4, 5));

TEST(Gradcheck, LinearMeanSquareIsTight) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    ParameterStore store;
    LinearParams p = make_linear(store, "lin", 3, 2, LinearInit::kUniform, rng);
    const Tensor x = random_tensor({4, 3}, rng);
    const Tensor y = random_tensor({4, 2}, rng);
    Objective f = [&](Tape& t, const ParameterStore& s) {
      Var r = ad::sub(t, ad::linear(t, s, p, t.constant(x)), t.constant(y));
      Var sq = ad::mul(t, r, r);
      Var col = ad::matmul(t, sq, t.constant(Tensor({2, 1}, 1.0)));
      return ad::matmul(t, t.constant(Tensor({1, 4}, 1.0 / 8.0)), col);
    };
    const GradCheckReport rep = finite_diff_gradient_check(f, store);
    EXPECT_LE(rep.max_relative_error, 1e-6) << seed;
    EXPECT_EQ(rep.per_parameter_errors.size(), 2u);
    EXPECT_EQ(rep.coordinates_checked, 8u);
  }
}

TEST(Gradcheck, ConstantObjectiveHasZeroGradients) {
  Rng rng(1);
  ParameterStore store;
  store.add("w", random_tensor({3, 3}, rng));
  Objective f = [](Tape& t, const ParameterStore&) { return t.constant(Tensor({1}, 2.5)); };
  const GradCheckReport rep = finite_diff_gradient_check(f, store);
  EXPECT_EQ(rep.max_relative_error, 0.0);
  for (double g : store.entries()[0].grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(Gradcheck, NonFiniteObjectiveNamesParameter) {
  ParameterStore store;
  store.add("fine", Tensor({2}, 1.0));
  ParamId bad = store.add("trouble", Tensor({1}, 0.0));
  Objective f = [&](Tape& t, const ParameterStore& s) {
    // Finite at the start, infinite once "trouble" moves.
    const double v = s.value(bad)[0];
    Var x = t.param(s, bad);
    return ad::scale(t, x, v == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  };
  try {
    finite_diff_gradient_check(f, store);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("trouble"), std::string::npos);
  }
}

TEST(Gradcheck, BrokenBackwardIsCaught) {
  Rng rng(2);
  ParameterStore store;
  ParamId w = store.add("w", random_tensor({1, 3}, rng));
  // Doubles the true gradient of sum(w^2)/2.
  Objective f = [&](Tape& t, const ParameterStore& s) {
    Var x = t.param(s, w);
    const Tensor& v = t.value(x);
    double half = 0.0;
    for (double e : v.values()) half += 0.5 * e * e;
    return t.push(Tensor({1}, half), {x}, [x](Tape& tt, const Tensor& g) {
      Tensor d = tt.value(x);
      for (double& e : d.values()) e *= 2.0 * g[0];
      tt.accumulate(x, d);
    });
  };
  EXPECT_GT(finite_diff_gradient_check(f, store).max_relative_error, 0.1);
}

}  // namespace
}  // namespace gtad
