#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <optional>
#include <vector>

#include "cracklab/errors.hpp"

namespace cracklab {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Pixel coordinates on the image plane (continuous).
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// An SE(3) element stored as unit quaternion + translation, with an
/// optional timestamp in seconds. The quaternion is renormalized on
/// construction so downstream math can rely on unit norm.
struct RigidPose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();
  std::optional<double> timestamp;

  RigidPose() = default;
  RigidPose(const Quat& q, const Vec3& t,
            std::optional<double> stamp = std::nullopt)
      : rotation(q.normalized()), translation(t), timestamp(stamp) {}

  static RigidPose identity() { return RigidPose(); }

  RigidPose inverse() const {
    Quat qi = rotation.conjugate();
    return RigidPose(qi, qi * (-translation), timestamp);
  }

  /// this ∘ other: applies `other` first, then `this`.
  RigidPose compose(const RigidPose& other) const {
    return RigidPose(rotation * other.rotation,
                     rotation * other.translation + translation);
  }

  /// Rotation angle (radians) of rotation.inverse() * other.rotation.
  double rotation_angle_to(const RigidPose& other) const {
    double d = std::abs(rotation.dot(other.rotation));
    d = std::min(d, 1.0);
    return 2.0 * std::acos(d);
  }
};

/// Undistorted pinhole intrinsics.
struct CameraModel {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && cx >= 0 && cx < width && cy >= 0 &&
           cy < height;
  }
  bool in_frame(const Pixel& px) const {
    return px.u >= 0 && px.u < width && px.v >= 0 && px.v < height;
  }
};

/// R·p + t
inline Vec3 transform_point(const RigidPose& pose, const Vec3& p) {
  return pose.rotation * p + pose.translation;
}

/// Pinhole projection of a point already in the camera frame.
/// Throws BehindCamera when z <= 0.
Pixel project(const CameraModel& cam, const Vec3& p_cam);

/// Projection of a LiDAR-frame point through the extrinsic transform.
/// Identical to project(cam, transform_point(extrinsic, p)).
Pixel project_lidar_point(const CameraModel& cam, const RigidPose& extrinsic,
                          const Vec3& p_lidar);

/// Spherical interpolation of rotation (shortest path, nlerp fallback for
/// tiny angles) with componentwise-linear translation.
RigidPose slerp_pose(const RigidPose& p0, const RigidPose& p1, double t);

/// Pose at a camera timestamp from a time-sorted pose sequence.
/// Throws OutOfRange when t_cam lies outside the trajectory span.
RigidPose interpolate_camera_pose(const std::vector<RigidPose>& trajectory,
                                  double t_cam);

}  // namespace cracklab
