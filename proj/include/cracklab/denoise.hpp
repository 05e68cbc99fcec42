#pragma once

#include <cstddef>
#include <vector>

#include "cracklab/kdtree.hpp"
#include "cracklab/point_cloud.hpp"

namespace cracklab {

struct SorResult {
  PointCloud kept;
  std::vector<std::size_t> removed;  // indices into the input cloud
};

/// Statistical outlier removal: drops points whose mean K-nearest-neighbor
/// distance exceeds mu + N*sigma over the whole cloud.
SorResult sor_filter(const PointCloud& cloud, std::size_t k = 60,
                     double n_sigma = 1.0);

struct MlsConfig {
  double search_radius = 0.0;  // <= 0: 5x median nearest-neighbor spacing
  int polynomial_degree = 2;   // 1..3
};

/// Local polynomial patch over a fitted reference plane.
struct MlsSurface {
  Vec3 origin = Vec3::Zero();  // weighted centroid
  Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY(), normal = Vec3::UnitZ();
  std::vector<double> coeffs;  // basis x^i y^j, i+j <= degree, lex order
  int degree = 2;

  double height(double u, double v) const;
  /// Projects a point onto the patch along the plane normal.
  Vec3 project(const Vec3& p) const;
};

/// Weighted plane + bivariate polynomial fit around `center`.
/// Throws InsufficientNeighbors / DegenerateNeighborhood.
MlsSurface fit_mls_polynomial(const Vec3& center, const PointCloud& neighbors,
                              const MlsConfig& cfg);

struct MlsResult {
  PointCloud cloud;
  std::size_t fallback_count = 0;  // points passed through unchanged
};

/// Projects every point onto its local MLS surface; failures pass through.
MlsResult mls_smooth(const PointCloud& cloud, MlsConfig cfg);

/// Points strictly inside the axis-aligned box.
PointCloud crop_box(const PointCloud& cloud, const Vec3& min_corner,
                    const Vec3& max_corner);

/// Median distance to the nearest neighbor; 0 for clouds of < 2 points.
double median_nn_spacing(const PointCloud& cloud);

}  // namespace cracklab
