#pragma once

#include "cracklab/image.hpp"
#include "cracklab/point_cloud.hpp"

namespace cracklab {

struct MeanStd {
  double mean = 0;
  double stddev = 0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

/// Two-class mean intersection-over-union; classes empty in both masks
/// score 1.
double miou(const BinaryMask& pred, const BinaryMask& gt);

/// Per-point neighbor count (self excluded) within the radius.
MeanStd point_surface_density(const PointCloud& cloud, double radius = 0.01);

/// Per-point distance to the least-squares plane of its radius
/// neighborhood; points with fewer than 3 neighbors are skipped.
MeanStd surface_roughness(const PointCloud& cloud, double radius = 0.01);

}  // namespace cracklab
