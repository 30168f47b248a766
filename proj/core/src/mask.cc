#include "gtad/mask.h"

#include <algorithm>
#include <string>

#include "gtad/error.h"

namespace gtad {

Mask::Mask(std::size_t height, std::size_t width, bool value)
    : height_(height), width_(width), bits_(height * width, value ? 1 : 0) {}

Mask::Mask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  if (bits_.size() != height * width) {
    throw DimensionError("mask: " + std::to_string(bits_.size()) +
                         " entries for " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(
      std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

bool Mask::subset_of(const Mask& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

}  // namespace gtad
