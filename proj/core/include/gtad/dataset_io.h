#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gtad/config.h"
#include "gtad/synthdata.h"

namespace gtad {

// A sample file is four TMF1 blocks back to back: rgb (f64, H x W x D_rgb),
// 3d (f64, H x W x D_3d), validity (f32, H x W, 0/1), gt (f32, H x W, 0/1).
std::string encode_sample(const LabeledSample& s);
LabeledSample decode_sample(std::string_view bytes, const std::string& class_name,
                            bool is_anomalous);

struct ManifestEntry {
  std::string file;  // relative to the dataset root
  std::string split;  // "train" or "test"
  std::string class_name;
  bool is_anomalous = false;
};

struct Manifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t d_rgb = 0;
  std::size_t d_3d = 0;
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.json";

std::string encode_manifest(const Manifest& m);
Manifest decode_manifest(std::string_view text);
Manifest read_manifest(const std::filesystem::path& root);

// Writes train/NNNNN.tmf, test/NNNNN.tmf and manifest.json under `root`.
// Output bytes depend only on (dataset, cfg).
Manifest write_dataset(const std::filesystem::path& root, const Dataset& data,
                       const RunConfig& cfg);

struct LoadedDataset {
  Manifest manifest;
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

LoadedDataset read_dataset(const std::filesystem::path& root);
LabeledSample read_sample(const std::filesystem::path& path,
                          const std::string& class_name, bool is_anomalous);

// Manifest entry for a root-relative file name, or nullptr.
const ManifestEntry* find_entry(const Manifest& m, const std::string& file);

}  // namespace gtad
