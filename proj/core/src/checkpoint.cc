#include "gtad/checkpoint.h"

#include <set>

#include "gtad/error.h"
#include "json.hpp"

namespace gtad {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "gtad-checkpoint-1";
}

Checkpoint make_checkpoint(const RunConfig& cfg, const Head& head, std::size_t step) {
  Checkpoint c;
  c.config = cfg;
  c.step = step;
  for (const auto& e : head.store().entries()) c.tensors.emplace_back(e.name, e.value);
  return c;
}

Head restore_head(const Checkpoint& ckpt) {
  Head head(model_dims(ckpt.config), 0);
  ParameterStore& store = head.store();
  if (store.size() != ckpt.tensors.size()) {
    throw ValidationError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                          " tensors, architecture expects " + std::to_string(store.size()));
  }
  std::set<std::string> seen;
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (!seen.insert(name).second) throw ValidationError("checkpoint repeats tensor '" + name + "'");
    const auto id = store.find(name);
    if (!id) throw ValidationError("checkpoint tensor '" + name + "' is not a model parameter");
    if (store.value(*id).shape() != tensor.shape()) {
      throw ValidationError("checkpoint tensor '" + name + "' has shape " +
                            shape_string(tensor.shape()) + ", expected " +
                            shape_string(store.value(*id).shape()));
    }
    store.value(*id) = tensor;
  }
  return head;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const DType dtype = ckpt.config.checkpoint_dtype;
  const std::string dtype_name = dtype == DType::kF64 ? "f64" : "f32";
  std::string payload;
  json tensors = json::array();
  for (const auto& [name, tensor] : ckpt.tensors) {
    const std::string block = encode_tmf(tensor, dtype);
    tensors.push_back({{"name", name},
                       {"shape", tensor.shape()},
                       {"dtype", dtype_name},
                       {"offset", payload.size()},
                       {"length", block.size()}});
    payload += block;
  }
  json header = {{"format", kFormat},
                 {"step", ckpt.step},
                 {"seed", ckpt.config.seed},
                 {"config_hash", config_hash(ckpt.config)},
                 {"config", json::parse(to_json(ckpt.config))},
                 {"dtype", dtype_name},
                 {"tensors", tensors}};
  return header.dump() + "\n" + payload;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw IoError("checkpoint: missing header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::parse_error& e) {
    throw IoError(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (header.value("format", "") != kFormat) throw IoError("checkpoint: unknown format");
  const std::string_view payload = bytes.substr(nl + 1);
  Checkpoint c;
  try {
    c.config = parse_run_config(header.at("config").dump());
    c.step = header.at("step").get<std::size_t>();
    for (const auto& t : header.at("tensors")) {
      std::size_t offset = t.at("offset").get<std::size_t>();
      const std::size_t end = offset + t.at("length").get<std::size_t>();
      if (end > payload.size()) throw IoError("checkpoint: tensor block out of range");
      Tensor value = decode_tmf(payload, offset);
      if (offset != end) throw IoError("checkpoint: tensor block length mismatch");
      if (value.shape() != t.at("shape").get<Shape>()) {
        throw IoError("checkpoint: header shape disagrees with block");
      }
      c.tensors.emplace_back(t.at("name").get<std::string>(), std::move(value));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: malformed header: ") + e.what());
  }
  if (header.at("config_hash").get<std::string>() != config_hash(c.config)) {
    throw IoError("checkpoint: config hash mismatch");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace gtad
