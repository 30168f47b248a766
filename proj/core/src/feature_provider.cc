#include "gtad/feature_provider.h"

#include <bit>
#include <cstdint>

#include "gtad/error.h"

namespace gtad {

namespace {

ProvidedFeatures from_sample(const LabeledSample& s) {
  return {s.f_rgb, s.f_3d, s.mask, s.class_name};
}

}  // namespace

SynthProvider::SynthProvider(const SynthConfig& cfg, std::uint64_t seed)
    : data_(gen_dataset(cfg, seed)) {}

std::vector<std::string> SynthProvider::references() const {
  std::vector<std::string> refs;
  for (std::size_t i = 0; i < data_.train.size(); ++i) refs.push_back("train/" + std::to_string(i));
  for (std::size_t i = 0; i < data_.test.size(); ++i) refs.push_back("test/" + std::to_string(i));
  return refs;
}

ProvidedFeatures SynthProvider::provide(const std::string& ref) const {
  const auto slash = ref.find('/');
  if (slash == std::string::npos) throw ValidationError("unknown sample reference '" + ref + "'");
  const std::string split = ref.substr(0, slash);
  const std::vector<LabeledSample>* pool =
      split == "train" ? &data_.train : split == "test" ? &data_.test : nullptr;
  std::size_t index = 0;
  try {
    std::size_t used = 0;
    index = std::stoul(ref.substr(slash + 1), &used);
    if (used != ref.size() - slash - 1) pool = nullptr;
  } catch (const std::exception&) {
    pool = nullptr;
  }
  if (pool == nullptr || index >= pool->size()) {
    throw ValidationError("unknown sample reference '" + ref + "'");
  }
  return from_sample((*pool)[index]);
}

TmfDirectoryProvider::TmfDirectoryProvider(std::filesystem::path root)
    : root_(std::move(root)), manifest_(read_manifest(root_)) {}

std::vector<std::string> TmfDirectoryProvider::references() const {
  std::vector<std::string> refs;
  for (const auto& e : manifest_.entries) refs.push_back(e.file);
  return refs;
}

ProvidedFeatures TmfDirectoryProvider::provide(const std::string& ref) const {
  const ManifestEntry* e = find_entry(manifest_, ref);
  if (e == nullptr) throw ValidationError("unknown sample reference '" + ref + "'");
  return from_sample(read_sample(root_ / e->file, e->class_name, e->is_anomalous));
}

std::vector<ProviderDiagnostic> validate_provider(const FeatureProvider& provider,
                                                  std::span<const std::string> probes,
                                                  std::size_t d_rgb, std::size_t d_3d) {
  if (probes.empty()) throw ValidationError("validate_provider needs at least one probe");
  std::vector<ProviderDiagnostic> out;
  for (const std::string& ref : probes) {
    auto report = [&](std::string problem) { out.push_back({ref, std::move(problem)}); };
    ProvidedFeatures a, b;
    try {
      a = provider.provide(ref);
      b = provider.provide(ref);
    } catch (const std::exception& e) {
      report(std::string("provide failed: ") + e.what());
      continue;
    }
    if (a.f_rgb.rank() != 3 || a.f_3d.rank() != 3) {
      report("rank mismatch: feature grids must be H x W x D");
      continue;
    }
    const Shape& rs = a.f_rgb.shape();
    const Shape& gs = a.f_3d.shape();
    if (rs[0] != gs[0] || rs[1] != gs[1]) {
      report("grid mismatch: rgb " + shape_string(rs) + " vs 3d " + shape_string(gs));
    }
    if (a.mask.height() != rs[0] || a.mask.width() != rs[1]) {
      report("grid mismatch: validity mask " + std::to_string(a.mask.height()) + "x" +
             std::to_string(a.mask.width()) + " vs rgb " + shape_string(rs));
    }
    if (rs[2] != d_rgb || gs[2] != d_3d) {
      report("width mismatch: got " + std::to_string(rs[2]) + "/" + std::to_string(gs[2]) +
             ", configured " + std::to_string(d_rgb) + "/" + std::to_string(d_3d));
    }
    if (!a.f_rgb.all_finite()) report("non-finite: rgb features");
    if (!a.f_3d.all_finite()) report("non-finite: 3d features");
    // Bitwise comparison: NaN payloads compare by representation.
    auto same_bits = [](const Tensor& x, const Tensor& y) {
      if (x.shape() != y.shape()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(x[i]) != std::bit_cast<std::uint64_t>(y[i])) return false;
      }
      return true;
    };
    if (!same_bits(a.f_rgb, b.f_rgb) || !same_bits(a.f_3d, b.f_3d) || !(a.mask == b.mask) ||
        a.class_name != b.class_name) {
      report("nondeterministic: two calls returned different content");
    }
  }
  return out;
}

}  // namespace gtad
