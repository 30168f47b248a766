#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gtad/error.h"
#include "gtad/synthdata.h"
#include "test_support.h"

namespace gtad {
namespace {

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t.at(r, c);
  }
  return m;
}

Eigen::MatrixXd valid_rows(const Tensor& t, const ValidityMask& m) {
  Eigen::MatrixXd all = to_eigen(t);
  Eigen::MatrixXd out(m.count(), all.cols());
  Eigen::Index k = 0;
  for (std::size_t p = 0; p < m.size(); ++p) {
    if (m[p]) out.row(k++) = all.row(static_cast<Eigen::Index>(p));
  }
  return out;
}

// Largest canonical correlation: top singular value of Qx^T Qy for
// orthonormal bases of the centred column spaces.
double first_canonical_correlation(Eigen::MatrixXd x, Eigen::MatrixXd y) {
  x.rowwise() -= x.colwise().mean();
  y.rowwise() -= y.colwise().mean();
  auto basis = [](const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    const double tol = 1e-10 * svd.singularValues()(0);
    Eigen::Index rank = 0;
    while (rank < svd.singularValues().size() && svd.singularValues()(rank) > tol) ++rank;
    return Eigen::MatrixXd(svd.matrixU().leftCols(rank));
  };
  const Eigen::MatrixXd c = basis(x).transpose() * basis(y);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(c).singularValues()(0);
}

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.classes = {"bagel", "tire"};
  cfg.n_train_per_class = 3;
  cfg.n_test_per_class = 4;
  cfg.height = 8;
  cfg.width = 8;
  return cfg;
}

TEST(Synth, ClassNamesComeFromCatalog) {
  const auto& cat = class_catalog();
  EXPECT_EQ(cat.size(), 10u);
  for (const auto& c : SynthConfig{}.classes) {
    EXPECT_NE(std::find(cat.begin(), cat.end(), c), cat.end()) << c;
  }
}

TEST(Synth, GeneratorMapsAreFullRank) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ClassGenerator cg = make_class_generator("bagel", 4, 12, 18, 2, 0.05, seed);
    EXPECT_EQ(matrix_rank(cg.a_rgb), 4u);
    EXPECT_EQ(matrix_rank(cg.a_3d), 4u);
  }
}

TEST(Synth, SameSeedSameSample) {
  const ClassGenerator cg = make_class_generator("cookie", 4, 12, 18, 2, 0.05, 9);
  const LabeledSample a = gen_nominal(cg, 42, 16, 16);
  const LabeledSample b = gen_nominal(cg, 42, 16, 16);
  EXPECT_EQ(a.f_rgb, b.f_rgb);
  EXPECT_EQ(a.f_3d, b.f_3d);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_NE(gen_nominal(cg, 43, 16, 16).f_rgb, a.f_rgb);
}

TEST(Synth, BorderIsInvalid) {
  const ClassGenerator cg = make_class_generator("cookie", 4, 12, 18, 2, 0.05, 9);
  const LabeledSample s = gen_nominal(cg, 1, 10, 12, 2);
  EXPECT_EQ(s.mask.count(), 6u * 8u);
  EXPECT_FALSE(s.mask(1, 5));
  EXPECT_TRUE(s.mask(2, 2));
  EXPECT_FALSE(s.gt.any());
}

// With noise off both modalities are exact linear images of one latent
// field, so f_3d = f_rgb a_rgb^+ a_3d everywhere except inside the defect.
TEST(Synth, PseudoinverseResidualLocatesDefect) {
  for (Corruption kind : {Corruption::kGeometry, Corruption::kAppearance}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const ClassGenerator cg = make_class_generator("rope", 4, 12, 18, 2, 0.0, seed);
      const LabeledSample nominal = gen_nominal(cg, seed + 100, 16, 16);
      const LabeledSample s = inject_anomaly(nominal, cg, seed + 200, {}, kind);
      const Eigen::MatrixXd pinv =
          to_eigen(cg.a_rgb).completeOrthogonalDecomposition().pseudoInverse();
      const Eigen::MatrixXd resid =
          to_eigen(s.f_3d) - to_eigen(s.f_rgb) * pinv * to_eigen(cg.a_3d);
      for (std::size_t p = 0; p < s.gt.size(); ++p) {
        const double r = resid.row(static_cast<Eigen::Index>(p)).norm();
        if (s.gt[p]) {
          ASSERT_GT(r, 1e-6) << p;
        } else {
          ASSERT_LT(r, 1e-9) << p;
        }
      }
    }
  }
}

TEST(Synth, ModalitiesAreCorrelated) {
  int wins = 0;
  double same_total = 0.0, indep_total = 0.0;
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    const ClassGenerator cg = make_class_generator("peach", 4, 12, 18, 2, 0.05, draw);
    const LabeledSample a = gen_nominal(cg, 1000 + draw, 16, 16);
    const LabeledSample b = gen_nominal(cg, 5000 + draw, 16, 16);
    const double same = first_canonical_correlation(valid_rows(a.f_rgb, a.mask),
                                                    valid_rows(a.f_3d, a.mask));
    const double indep = first_canonical_correlation(valid_rows(a.f_rgb, a.mask),
                                                     valid_rows(b.f_3d, b.mask));
    same_total += same;
    indep_total += indep;
    if (same > indep) ++wins;
  }
  EXPECT_EQ(wins, 100);
  EXPECT_GT(same_total / 100.0, 0.99);
  EXPECT_LT(indep_total / 100.0, same_total / 100.0);
}

TEST(Synth, DegenerateAreaMatchesFraction) {
  const ClassGenerator cg = make_class_generator("foam", 4, 12, 18, 2, 0.05, 3);
  for (double f : {0.02, 0.05, 0.1, 0.15}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const LabeledSample n = gen_nominal(cg, seed, 16, 16);
      const LabeledSample s = inject_anomaly(n, cg, seed + 50, {f, f});
      const double valid = static_cast<double>(n.mask.count());
      ASSERT_LE(std::abs(static_cast<double>(s.gt.count()) - f * valid), 1.0);
    }
  }
}

TEST(Synth, AnomalyIsLocal) {
  Rng rng(4);
  const ClassGenerator cg = make_class_generator("tire", 4, 12, 18, 2, 0.05, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LabeledSample n = gen_nominal(cg, seed, 16, 16);
    const LabeledSample s = inject_anomaly(n, cg, seed + 7, {});
    ASSERT_TRUE(s.is_anomalous);
    ASSERT_TRUE(s.gt.any());
    ASSERT_TRUE(s.gt.subset_of(s.mask));
    ASSERT_EQ(s.f_rgb, n.f_rgb);
    for (std::size_t p = 0; p < s.gt.size(); ++p) {
      if (s.gt[p]) continue;
      for (std::size_t c = 0; c < 18; ++c) ASSERT_EQ(s.f_3d.at(p, c), n.f_3d.at(p, c));
    }
  }
}

TEST(Synth, BlobThatCannotFitThrows) {
  const ClassGenerator cg = make_class_generator("tire", 4, 12, 18, 2, 0.05, 4);
  LabeledSample n = gen_nominal(cg, 1, 8, 8);
  // A single valid row cannot hold a round blob of 3 pixels.
  n.mask = ValidityMask(8, 8, false);
  for (std::size_t c = 0; c < 8; ++c) n.mask.set(4, c, true);
  EXPECT_THROW(inject_anomaly(n, cg, 2, {0.4, 0.4}), ValidationError);
}

TEST(Synth, DatasetLayout) {
  const SynthConfig cfg = SynthConfig{};
  const Dataset d = gen_dataset(cfg, 7);
  EXPECT_EQ(d.train.size(), 256u);
  EXPECT_EQ(d.test.size(), 256u);
  for (const auto& s : d.train) {
    ASSERT_FALSE(s.is_anomalous);
    ASSERT_FALSE(s.gt.any());
  }
  std::size_t anomalous = 0;
  for (const auto& s : d.test) anomalous += s.is_anomalous;
  EXPECT_EQ(anomalous, 128u);
}

TEST(Synth, DatasetIsPureFunctionOfSeed) {
  const SynthConfig cfg = small_config();
  const Dataset a = gen_dataset(cfg, 11), b = gen_dataset(cfg, 11), c = gen_dataset(cfg, 12);
  ASSERT_EQ(a.test.size(), b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) {
    EXPECT_EQ(a.test[i].f_3d, b.test[i].f_3d);
    EXPECT_EQ(a.test[i].gt, b.test[i].gt);
  }
  EXPECT_NE(a.train[0].f_rgb, c.train[0].f_rgb);
}

TEST(Synth, InvalidConfigsThrow) {
  SynthConfig cfg = small_config();
  cfg.n_test_per_class = 3;
  EXPECT_THROW(gen_dataset(cfg, 1), ConfigError);
  cfg = small_config();
  cfg.d_latent = 20;
  EXPECT_THROW(gen_dataset(cfg, 1), ConfigError);
  cfg = small_config();
  cfg.classes.clear();
  EXPECT_THROW(gen_dataset(cfg, 1), ConfigError);
  cfg = small_config();
  cfg.area_frac_min = 0.5;
  cfg.area_frac_max = 0.2;
  EXPECT_THROW(gen_dataset(cfg, 1), ConfigError);
}

}  // namespace
}  // namespace gtad
