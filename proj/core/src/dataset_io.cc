#include "gtad/dataset_io.h"

#include <cstdio>

#include "gtad/error.h"
#include "gtad/tmf.h"
#include "json.hpp"

namespace gtad {

using nlohmann::json;

namespace {

Tensor mask_tensor(const Mask& m) {
  Tensor t({m.height(), m.width()});
  for (std::size_t i = 0; i < m.size(); ++i) t[i] = m[i] ? 1.0 : 0.0;
  return t;
}

Mask tensor_mask(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw IoError(std::string("sample: ") + what + " must be rank 2");
  Mask m(t.shape()[0], t.shape()[1]);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != 0.0 && t[i] != 1.0) {
      throw IoError(std::string("sample: ") + what + " holds a value other than 0/1");
    }
    m.set(i, t[i] == 1.0);
  }
  return m;
}

std::string numbered(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s/%05zu.tmf", split, i);
  return buf;
}

}  // namespace

std::string encode_sample(const LabeledSample& s) {
  return encode_tmf(s.f_rgb, DType::kF64) + encode_tmf(s.f_3d, DType::kF64) +
         encode_tmf(mask_tensor(s.mask), DType::kF32) +
         encode_tmf(mask_tensor(s.gt), DType::kF32);
}

LabeledSample decode_sample(std::string_view bytes, const std::string& class_name,
                            bool is_anomalous) {
  std::size_t off = 0;
  LabeledSample s;
  s.class_name = class_name;
  s.is_anomalous = is_anomalous;
  s.f_rgb = decode_tmf(bytes, off);
  s.f_3d = decode_tmf(bytes, off);
  s.mask = tensor_mask(decode_tmf(bytes, off), "validity");
  s.gt = tensor_mask(decode_tmf(bytes, off), "gt");
  if (off != bytes.size()) throw IoError("sample: trailing bytes");
  if (s.f_rgb.rank() != 3 || s.f_3d.rank() != 3) throw IoError("sample: features must be rank 3");
  // Grid agreement between the two modalities is left to the consumer so a
  // provider check can report it by name.
  if (s.mask.height() != s.f_rgb.shape()[0] || s.mask.width() != s.f_rgb.shape()[1] ||
      s.gt.height() != s.mask.height() || s.gt.width() != s.mask.width()) {
    throw IoError("sample: mask extents do not match the rgb grid");
  }
  return s;
}

std::string encode_manifest(const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"file", e.file},
                       {"split", e.split},
                       {"class", e.class_name},
                       {"is_anomalous", e.is_anomalous}});
  }
  json doc = {{"config_hash", m.config_hash}, {"seed", m.seed},
              {"height", m.height},           {"width", m.width},
              {"d_rgb", m.d_rgb},             {"d_3d", m.d_3d},
              {"samples", entries}};
  return doc.dump(1) + "\n";
}

Manifest decode_manifest(std::string_view text) {
  Manifest m;
  try {
    const json doc = json::parse(text);
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.height = doc.at("height").get<std::size_t>();
    m.width = doc.at("width").get<std::size_t>();
    m.d_rgb = doc.at("d_rgb").get<std::size_t>();
    m.d_3d = doc.at("d_3d").get<std::size_t>();
    for (const auto& e : doc.at("samples")) {
      ManifestEntry entry{e.at("file").get<std::string>(), e.at("split").get<std::string>(),
                          e.at("class").get<std::string>(), e.at("is_anomalous").get<bool>()};
      if (entry.split != "train" && entry.split != "test") {
        throw IoError("manifest: unknown split '" + entry.split + "'");
      }
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& root) {
  return decode_manifest(read_file(root / kManifestName));
}

Manifest write_dataset(const std::filesystem::path& root, const Dataset& data,
                       const RunConfig& cfg) {
  std::error_code ec;
  for (const char* split : {"train", "test"}) {
    std::filesystem::create_directories(root / split, ec);
    if (ec) throw IoError("cannot create " + (root / split).string() + ": " + ec.message());
  }
  Manifest m;
  m.config_hash = config_hash(cfg);
  m.seed = cfg.seed;
  m.height = cfg.data.height;
  m.width = cfg.data.width;
  m.d_rgb = cfg.data.d_rgb;
  m.d_3d = cfg.data.d_3d;
  auto emit = [&](const char* split, const std::vector<LabeledSample>& samples) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const std::string file = numbered(split, i);
      write_file(root / file, encode_sample(samples[i]));
      m.entries.push_back({file, split, samples[i].class_name, samples[i].is_anomalous});
    }
  };
  emit("train", data.train);
  emit("test", data.test);
  write_file(root / kManifestName, encode_manifest(m));
  return m;
}

LabeledSample read_sample(const std::filesystem::path& path,
                          const std::string& class_name, bool is_anomalous) {
  const std::string bytes = read_file(path);
  try {
    return decode_sample(bytes, class_name, is_anomalous);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

LoadedDataset read_dataset(const std::filesystem::path& root) {
  LoadedDataset out;
  out.manifest = read_manifest(root);
  for (const auto& e : out.manifest.entries) {
    LabeledSample s = read_sample(root / e.file, e.class_name, e.is_anomalous);
    (e.split == "train" ? out.train : out.test).push_back(std::move(s));
  }
  return out;
}

const ManifestEntry* find_entry(const Manifest& m, const std::string& file) {
  for (const auto& e : m.entries) {
    if (e.file == file) return &e;
  }
  return nullptr;
}

}  // namespace gtad
