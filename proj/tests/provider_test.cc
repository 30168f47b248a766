#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "gtad/config.h"
#include "gtad/dataset_io.h"
#include "gtad/error.h"
#include "gtad/feature_provider.h"
#include "test_support.h"

namespace gtad {
namespace {

SynthConfig tiny() {
  SynthConfig cfg;
  cfg.classes = {"bagel", "foam"};
  cfg.n_train_per_class = 2;
  cfg.n_test_per_class = 2;
  cfg.height = 6;
  cfg.width = 5;
  return cfg;
}

bool has_tag(const std::vector<ProviderDiagnostic>& d, const std::string& tag) {
  for (const auto& x : d) {
    if (x.problem.rfind(tag, 0) == 0) return true;
  }
  return false;
}

// Wraps another provider and damages what it returns.
class Tampered : public FeatureProvider {
 public:
  enum class Fault { kShortGeo, kNaN, kInf, kWidth, kMaskSize, kDrift, kThrow };
  Tampered(const FeatureProvider& inner, Fault f) : inner_(inner), fault_(f) {}
  std::vector<std::string> references() const override { return inner_.references(); }
  ProvidedFeatures provide(const std::string& ref) const override {
    ProvidedFeatures p = inner_.provide(ref);
    switch (fault_) {
      case Fault::kShortGeo:
        p.f_3d = Tensor({p.f_3d.shape()[0] - 1, p.f_3d.shape()[1], p.f_3d.shape()[2]});
        break;
      case Fault::kNaN:
        p.f_rgb[3] = std::numeric_limits<double>::quiet_NaN();
        break;
      case Fault::kInf:
        p.f_3d[0] = std::numeric_limits<double>::infinity();
        break;
      case Fault::kWidth:
        p.f_rgb = Tensor({p.f_rgb.shape()[0], p.f_rgb.shape()[1], 3});
        break;
      case Fault::kMaskSize:
        p.mask = ValidityMask(2, 2, true);
        break;
      case Fault::kDrift:
        p.f_rgb[0] += static_cast<double>(++calls_);
        break;
      case Fault::kThrow:
        throw IoError("disk on fire");
    }
    return p;
  }

 private:
  const FeatureProvider& inner_;
  Fault fault_;
  mutable std::atomic<int> calls_{0};
};

TEST(Provider, SynthProviderPasses) {
  const SynthProvider p(tiny(), 3);
  const auto refs = p.references();
  ASSERT_EQ(refs.size(), 8u);
  EXPECT_EQ(refs.front(), "train/0");
  EXPECT_EQ(refs.back(), "test/3");
  EXPECT_TRUE(validate_provider(p, refs, 12, 18).empty());
  const ProvidedFeatures f = p.provide("test/1");
  EXPECT_EQ(f.class_name, "bagel");
  EXPECT_EQ(f.f_rgb.shape(), (Shape{6, 5, 12}));
  EXPECT_THROW(p.provide("val/0"), ValidationError);
  EXPECT_THROW(p.provide("test/99"), ValidationError);
  EXPECT_THROW(p.provide("nonsense"), ValidationError);
}

TEST(Provider, DirectoryProviderMatchesSynth) {
  RunConfig cfg;
  cfg.data = tiny();
  const Dataset d = gen_dataset(cfg.data, 3);
  testing::TempDir dir("provider");
  const Manifest m = write_dataset(dir.path(), d, cfg);
  const TmfDirectoryProvider disk(dir.path());
  const SynthProvider mem(d);
  const auto refs = disk.references();
  ASSERT_EQ(refs.size(), m.entries.size());
  EXPECT_TRUE(validate_provider(disk, refs, 12, 18).empty());
  // Manifest order is train then test, same as the in-memory references.
  const auto mem_refs = mem.references();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const ProvidedFeatures a = disk.provide(refs[i]);
    const ProvidedFeatures b = mem.provide(mem_refs[i]);
    EXPECT_EQ(a.f_rgb, b.f_rgb);
    EXPECT_EQ(a.mask, b.mask);
    EXPECT_EQ(a.class_name, b.class_name);
  }
  EXPECT_THROW(disk.provide("train/99999.tmf"), ValidationError);
}

TEST(Provider, FaultsAreDiagnosed) {
  const SynthProvider inner(tiny(), 3);
  const std::vector<std::string> probes{"train/0", "test/2"};
  using F = Tampered::Fault;
  const std::vector<std::pair<F, std::string>> cases{
      {F::kShortGeo, "grid mismatch"}, {F::kNaN, "non-finite"},
      {F::kInf, "non-finite"},         {F::kWidth, "width mismatch"},
      {F::kMaskSize, "grid mismatch"}, {F::kDrift, "nondeterministic"},
      {F::kThrow, "provide failed"}};
  for (const auto& [fault, tag] : cases) {
    const Tampered p(inner, fault);
    const auto diag = validate_provider(p, probes, 12, 18);
    EXPECT_TRUE(has_tag(diag, tag)) << tag;
    for (const auto& d : diag) {
      EXPECT_TRUE(d.reference == probes[0] || d.reference == probes[1]);
    }
  }
}

TEST(Provider, ConfiguredWidthsAreChecked) {
  const SynthProvider p(tiny(), 3);
  const std::vector<std::string> probes{"train/1"};
  EXPECT_TRUE(has_tag(validate_provider(p, probes, 12, 17), "width mismatch"));
}

TEST(Provider, EmptyProbesThrow) {
  const SynthProvider p(tiny(), 3);
  EXPECT_THROW(validate_provider(p, {}, 12, 18), ValidationError);
}

}  // namespace
}  // namespace gtad
