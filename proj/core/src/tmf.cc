#include "gtad/tmf.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "gtad/error.h"

namespace gtad {

namespace {

constexpr std::string_view kMagic = "TMF1";

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <typename U>
U get_le(std::string_view bytes, std::size_t& offset) {
  if (offset + sizeof(U) > bytes.size()) throw IoError("TMF1: truncated block");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  offset += sizeof(U);
  return v;
}

}  // namespace

std::string encode_tmf(const Tensor& t, DType dtype) {
  std::string out(kMagic);
  out.push_back(static_cast<char>(dtype));
  out.push_back(static_cast<char>(t.rank()));
  for (std::size_t e : t.shape()) {
    if (e > std::numeric_limits<std::uint32_t>::max()) {
      throw IoError("TMF1: extent exceeds u32");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e));
  }
  for (double v : t.values()) {
    if (dtype == DType::kF64) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    } else {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

Tensor decode_tmf(std::string_view bytes, std::size_t& offset, DType* dtype_out) {
  if (offset + 6 > bytes.size() || bytes.substr(offset, 4) != kMagic) {
    throw IoError("TMF1: bad magic");
  }
  offset += 4;
  const auto code = static_cast<std::uint8_t>(bytes[offset++]);
  if (code != 1 && code != 2) throw IoError("TMF1: unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const auto rank = static_cast<std::uint8_t>(bytes[offset++]);
  if (rank == 0) throw IoError("TMF1: rank 0");
  Shape shape;
  for (std::uint8_t i = 0; i < rank; ++i) {
    const auto e = get_le<std::uint32_t>(bytes, offset);
    if (e == 0) throw IoError("TMF1: zero extent");
    shape.push_back(e);
  }
  const std::size_t n = shape_size(shape);
  const std::size_t width = dtype == DType::kF64 ? 8 : 4;
  if (offset + n * width > bytes.size()) throw IoError("TMF1: truncated payload");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (dtype == DType::kF64) {
      data[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, offset));
    } else {
      data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
    }
  }
  if (dtype_out) *dtype_out = dtype;
  return Tensor(std::move(shape), std::move(data));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_tmf(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  write_file(path, encode_tmf(t, dtype));
}

Tensor load_tmf(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t offset = 0;
  Tensor t = decode_tmf(bytes, offset);
  if (offset != bytes.size()) throw IoError("TMF1: trailing bytes in '" + path.string() + "'");
  return t;
}

}  // namespace gtad
