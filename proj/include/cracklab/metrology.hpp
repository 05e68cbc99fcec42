#pragma once

#include <utility>
#include <vector>

#include "cracklab/image.hpp"
#include "cracklab/measurement.hpp"
#include "cracklab/point_cloud.hpp"

namespace cracklab {

struct MetrologyParams {
  int window = 15;             // direction-estimation neighborhood, px
  double gaussian_sigma = 2.0; // px
  std::size_t plane_k = 60;    // neighbors for the local plane fit
  double sample_radius = 0.03; // meters
  double sample_step = 1e-4;   // meters (0.1 mm width resolution)
  double ray_miss_tolerance = 0.1;  // meters
};

/// Along-crack unit direction at a seed: Gaussian-smoothed Sobel mean
/// gradient over the window, rotated 90 degrees.
Eigen::Vector2d skeleton_direction(const BinaryMask& skeleton,
                                   const Pixel& seed, int window,
                                   double gaussian_sigma);

/// Sub-pixel left/right crack edge points: march from the seed along the
/// +/- perpendicular of `direction` in 0.25 px steps with bilinear mask
/// occupancy; the edge is the last position still >= 0.5.
std::pair<Pixel, Pixel> trace_edges(const BinaryMask& mask, const Pixel& seed,
                                    const Eigen::Vector2d& direction);

/// Least-squares plane through the k cloud neighbors of the ray's nearest
/// cloud point.
LocalPlane fit_local_plane(const PointCloud& cloud, const Vec3& ray_origin,
                           const Vec3& ray_direction, std::size_t k = 60,
                           double miss_tolerance = 0.1);

/// Regular grid on the plane around `center`: (x, y) spaced by `step`
/// within +/- radius, the third coordinate from the plane equation. Near-
/// vertical planes are sampled in a permuted frame where the normal's
/// largest component takes the role of c.
PointCloud sample_plane_points(const LocalPlane& plane, const Vec3& center,
                               double radius, double step);

struct EdgeLift {
  Vec3 point = Vec3::Zero();
  double pixel_error = 0;
  std::size_t sample_index = 0;
};

/// Sample whose projection is closest to the target pixel (exact argmin).
EdgeLift find_3d_edge(const PointCloud& samples, const Pixel& target,
                      const CameraModel& cam, const RigidPose& camera_pose);

/// Full five-step width measurement at one seed.
CrackMeasurement measure_crack(const PointCloud& cloud, const BinaryMask& mask,
                               const BinaryMask& skeleton, const Pixel& seed,
                               const CameraModel& cam,
                               const RigidPose& camera_pose,
                               const MetrologyParams& params);

struct ErrorStats {
  double mae_mm = 0;
  double mre_percent = 0;
};

/// Mean absolute and mean relative error over (calculated, reference) mm
/// pairs.
ErrorStats compute_error_stats(
    const std::vector<std::pair<double, double>>& pairs);

}  // namespace cracklab
