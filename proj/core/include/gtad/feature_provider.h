#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gtad/dataset_io.h"
#include "gtad/mask.h"
#include "gtad/synthdata.h"
#include "gtad/tensor.h"

namespace gtad {

struct ProvidedFeatures {
  FeatureGrid f_rgb;
  FeatureGrid f_3d;
  ValidityMask mask;
  std::string class_name;
};

// Any source of aligned RGB / 3D feature grids. Grid alignment is the
// provider's job; the head never resamples. provide() must be deterministic
// per reference and safe to call concurrently on distinct references.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual std::vector<std::string> references() const = 0;
  virtual ProvidedFeatures provide(const std::string& ref) const = 0;
};

// Serves an in-memory synthetic dataset. References are "train/<i>" and
// "test/<i>".
class SynthProvider : public FeatureProvider {
 public:
  SynthProvider(const SynthConfig& cfg, std::uint64_t seed);
  explicit SynthProvider(Dataset data) : data_(std::move(data)) {}

  std::vector<std::string> references() const override;
  ProvidedFeatures provide(const std::string& ref) const override;

 private:
  Dataset data_;
};

// Reads the sample files of a dataset directory. References are the
// manifest's file names.
class TmfDirectoryProvider : public FeatureProvider {
 public:
  explicit TmfDirectoryProvider(std::filesystem::path root);

  std::vector<std::string> references() const override;
  ProvidedFeatures provide(const std::string& ref) const override;

 private:
  std::filesystem::path root_;
  Manifest manifest_;
};

struct ProviderDiagnostic {
  std::string reference;
  std::string problem;  // starts with a fixed tag, e.g. "grid mismatch"
};

// Checks shape agreement, configured widths, finiteness and determinism
// across two calls for each probe. An empty result means the provider passed.
// Throws ValidationError when `probes` is empty.
std::vector<ProviderDiagnostic> validate_provider(const FeatureProvider& provider,
                                                  std::span<const std::string> probes,
                                                  std::size_t d_rgb, std::size_t d_3d);

}  // namespace gtad
