#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cracklab/errors.hpp"

namespace cracklab {

/// 8-bit raster, 1 (grayscale) or 3 (RGB) channels, row-major.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;
  std::optional<double> timestamp;

  static RasterImage gray(int w, int h, std::uint8_t fill = 0) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = 1;
    img.pixels.assign(static_cast<std::size_t>(w) * h, fill);
    return img;
  }
  static RasterImage rgb(int w, int h) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
    return img;
  }

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
};

/// Row-major boolean grid.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  std::uint8_t& at(int x, int y) {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  std::size_t area() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
  bool operator==(const BinaryMask& o) const {
    return width == o.width && height == o.height && bits == o.bits;
  }
};

}  // namespace cracklab
