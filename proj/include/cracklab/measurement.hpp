#pragma once

#include <string>

#include "cracklab/geometry.hpp"

namespace cracklab {

/// Plane a·x + b·y + c·z + d = 0 with unit normal (a,b,c).
struct LocalPlane {
  double a = 0, b = 0, c = 1, d = 0;
  double rms = 0;           // fit residual, meters
  std::size_t support = 0;  // points used for the fit

  double signed_distance(const Vec3& p) const {
    return a * p.x() + b * p.y() + c * p.z() + d;
  }
  Vec3 normal() const { return {a, b, c}; }
};

/// One measured crack site with full provenance.
struct CrackMeasurement {
  int crack_id = 0;
  std::string frame_id;
  Pixel seed;
  Eigen::Vector2d direction = Eigen::Vector2d::UnitX();  // along-crack, unit
  Pixel edge_left_2d, edge_right_2d;
  Vec3 edge_left_3d = Vec3::Zero();
  Vec3 edge_right_3d = Vec3::Zero();
  double width = 0.0;  // meters
  LocalPlane plane;
};

}  // namespace cracklab
