#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace npt {

// Active-feature bitvector over the original feature universe.
struct FeatureMask {
  std::vector<std::uint8_t> bits;

  FeatureMask() = default;
  explicit FeatureMask(std::vector<std::uint8_t> b) : bits(std::move(b)) {}

  static FeatureMask all(int m) { return FeatureMask(std::vector<std::uint8_t>(m, 1)); }

  int size() const { return static_cast<int>(bits.size()); }

  int active_count() const {
    int n = 0;
    for (std::uint8_t b : bits) n += b ? 1 : 0;
    return n;
  }

  bool is_active(int m) const { return bits[m] != 0; }

  std::vector<int> active_indices() const {
    std::vector<int> idx;
    idx.reserve(bits.size());
    for (size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) idx.push_back(static_cast<int>(i));
    return idx;
  }
};

}  // namespace npt
