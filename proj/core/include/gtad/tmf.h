#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gtad/tensor.h"

namespace gtad {

// TMF1 tensor block:
//   "TMF1" | u8 dtype (1 = f32, 2 = f64) | u8 rank | rank x u32 extents |
//   row-major payload
// All integers and floats little-endian.
enum class DType : std::uint8_t { kF32 = 1, kF64 = 2 };

std::string encode_tmf(const Tensor& t, DType dtype);

// Decodes one block starting at `offset` and advances it. f32 payloads are
// widened to double. Throws IoError on malformed input.
Tensor decode_tmf(std::string_view bytes, std::size_t& offset,
                  DType* dtype_out = nullptr);

std::string read_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes (truncate + write); throws IoError.
void write_file(const std::filesystem::path& path, std::string_view bytes);

void save_tmf(const std::filesystem::path& path, const Tensor& t, DType dtype);
Tensor load_tmf(const std::filesystem::path& path);

}  // namespace gtad
