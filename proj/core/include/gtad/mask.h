#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gtad {

// H x W boolean field, row-major. Used both for validity (which patches carry
// usable geometry) and for ground-truth defect pixels.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t height, std::size_t width, bool value = false);
  Mask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * width_ + c] != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits_[r * width_ + c] = v ? 1 : 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const;
  bool any() const { return count() > 0; }
  // True if every set pixel here is also set in `other`.
  bool subset_of(const Mask& other) const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

using ValidityMask = Mask;
using PixelMask = Mask;

}  // namespace gtad
