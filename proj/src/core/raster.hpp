#pragma once

#include <cstdint>
#include <vector>

#include "core/common.hpp"

namespace fdnet {

/// H x W integer grid for class labels, band indices, and distances.
struct Raster {
  int h = 0, w = 0;
  std::vector<int32_t> v;

  Raster() = default;
  Raster(int h_, int w_, int32_t fill = 0)
      : h(h_), w(w_), v(static_cast<size_t>(h_) * static_cast<size_t>(w_), fill) {
    detail::require(h_ > 0 && w_ > 0, ErrorKind::shape_mismatch, "raster extents must be positive");
  }

  int32_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  int32_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  int64_t size() const { return static_cast<int64_t>(v.size()); }
  bool same_shape(const Raster& o) const { return h == o.h && w == o.w; }
};

/// H x W boolean grid.
struct Mask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;

  Mask() = default;
  Mask(int h_, int w_, bool fill = false)
      : h(h_), w(w_), v(static_cast<size_t>(h_) * static_cast<size_t>(w_), fill ? 1 : 0) {
    detail::require(h_ > 0 && w_ > 0, ErrorKind::shape_mismatch, "mask extents must be positive");
  }

  void set(int y, int x, bool b) { v[static_cast<size_t>(y) * w + x] = b ? 1 : 0; }
  bool at(int y, int x) const { return v[static_cast<size_t>(y) * w + x] != 0; }
  int64_t count() const {
    int64_t n = 0;
    for (uint8_t b : v) n += b;
    return n;
  }
  bool same_shape(const Mask& o) const { return h == o.h && w == o.w; }
};

}  // namespace fdnet
