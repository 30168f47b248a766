#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gtad/config.h"
#include "gtad/model.h"
#include "gtad/tmf.h"

namespace gtad {

// Serialized head: a single-line JSON header terminated by '\n' followed by
// the TMF1 blocks of every trainable tensor in store order. Header fields:
// format, step, seed, config_hash, config, dtype, tensors[{name, shape,
// dtype, offset, length}] with offsets relative to the first byte after the
// newline.
struct Checkpoint {
  RunConfig config;
  std::size_t step = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

Checkpoint make_checkpoint(const RunConfig& cfg, const Head& head, std::size_t step);

// Rebuilds a head with the checkpoint's dimensions and loads every tensor.
// Throws ValidationError if the tensor set does not match the architecture.
Head restore_head(const Checkpoint& ckpt);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gtad
