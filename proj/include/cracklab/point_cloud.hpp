#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cracklab/geometry.hpp"

namespace cracklab {

using Rgb = std::array<std::uint8_t, 3>;

/// Ordered point set with optional per-point attributes. Attribute vectors
/// are either empty or exactly points.size() long.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<float> intensity;    // unitless, range recorded by producer
  std::vector<Rgb> color;          // 0-255 per channel
  std::vector<std::uint8_t> label; // 0 = background, 1 = crack

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_intensity() const { return !intensity.empty(); }
  bool has_color() const { return !color.empty(); }
  bool has_label() const { return !label.empty(); }

  /// Keeps the attribute rows whose index appears in `indices` (in order).
  PointCloud select(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    for (std::size_t i : indices) {
      out.points.push_back(points[i]);
      if (has_intensity()) out.intensity.push_back(intensity[i]);
      if (has_color()) out.color.push_back(color[i]);
      if (has_label()) out.label.push_back(label[i]);
    }
    return out;
  }
};

/// Time-sorted pose sequence (strictly increasing timestamps).
struct Trajectory {
  std::vector<RigidPose> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

}  // namespace cracklab
