#pragma once

#include <vector>

#include "cracklab/image.hpp"
#include "cracklab/point_cloud.hpp"

namespace cracklab {

struct FusionConfig {
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double ideal_distance = 2.0;  // meters
  double sigma = 0.5;           // meters
  int top_n = 4;
  double hpr_radius_scale = 1000.0;
};

/// One view of a point: color/label sampled at its projection plus the two
/// quality scores and the combined weight.
struct ViewObservation {
  int frame_id = 0;
  Rgb color{0, 0, 0};
  std::uint8_t label = 0;
  double score_orientation = 0;  // [-1, 1]
  double score_distance = 0;     // (0, 1]
  double weight = 0;
};

/// A registered camera frame: image, crack mask (may be empty when the
/// frame carries no segmentation), and the camera-to-world pose.
struct FusionFrame {
  RasterImage image;
  BinaryMask mask;
  RigidPose camera_pose;
};

/// Hidden-point-removal visibility. Points are given in world coordinates;
/// each is inverted about a sphere of radius R = radius_scale x max range
/// centered at the camera, and a point is visible iff its inverted image is
/// a convex-hull vertex of the inverted set plus the camera center.
std::vector<std::size_t> hpr_visible(const PointCloud& cloud,
                                     const Vec3& camera_position,
                                     double radius_scale = 1000.0);

/// Cosine between the camera->point direction and the optical axis.
double score_orientation(const Vec3& point, const RigidPose& camera_pose);

/// Gaussian falloff around the ideal viewing distance.
double score_distance(const Vec3& point, const Vec3& camera_position,
                      double ideal_distance, double sigma);

/// Stages 1-4: per frame, HPR-filter, project, and record color/label with
/// both scores for every visible in-frame point.
std::vector<std::vector<ViewObservation>> accumulate_observations(
    const PointCloud& cloud, const std::vector<FusionFrame>& frames,
    const CameraModel& cam, const FusionConfig& cfg);

struct FusedPoint {
  Rgb color{0, 0, 0};
  bool has_color = false;
  std::uint8_t label = 0;
  std::size_t support = 0;
};

/// Stages 5-6: keep the top_n observations by weight (frame_id tiebreak),
/// weight-average the colors (round half up), weighted majority vote on the
/// label.
FusedPoint fuse_point(std::vector<ViewObservation> observations,
                      const FusionConfig& cfg);

struct FuseResult {
  PointCloud cloud;  // input geometry with color + label attached
  std::vector<std::size_t> support;
};

FuseResult fuse_cloud(const PointCloud& cloud,
                      const std::vector<FusionFrame>& frames,
                      const CameraModel& cam, const FusionConfig& cfg);

}  // namespace cracklab
