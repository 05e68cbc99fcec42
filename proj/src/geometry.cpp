#include "cracklab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace cracklab {

Pixel project(const CameraModel& cam, const Vec3& p_cam) {
  if (p_cam.z() <= 0.0) {
    throw BehindCamera("point at z=" + std::to_string(p_cam.z()));
  }
  return {cam.fx * p_cam.x() / p_cam.z() + cam.cx,
          cam.fy * p_cam.y() / p_cam.z() + cam.cy};
}

Pixel project_lidar_point(const CameraModel& cam, const RigidPose& extrinsic,
                          const Vec3& p_lidar) {
  return project(cam, transform_point(extrinsic, p_lidar));
}

RigidPose slerp_pose(const RigidPose& p0, const RigidPose& p1, double t) {
  Eigen::Vector4d q0 = p0.rotation.coeffs();
  Eigen::Vector4d q1 = p1.rotation.coeffs();
  // Double cover: pick the representative of q1 on the same hemisphere so
  // the geodesic is the short one.
  double dot = q0.dot(q1);
  if (dot < 0.0) {
    q1 = -q1;
    dot = -dot;
  }
  dot = std::min(dot, 1.0);
  const double omega = std::acos(dot);

  Eigen::Vector4d q;
  if (omega < 1e-8) {
    // sin(omega) underflows; normalized lerp is exact to first order here.
    q = ((1.0 - t) * q0 + t * q1).normalized();
  } else {
    const double s = std::sin(omega);
    q = (std::sin((1.0 - t) * omega) / s) * q0 +
        (std::sin(t * omega) / s) * q1;
  }

  std::optional<double> stamp;
  if (p0.timestamp && p1.timestamp) {
    stamp = (1.0 - t) * *p0.timestamp + t * *p1.timestamp;
  }
  return RigidPose(Quat(q(3), q(0), q(1), q(2)),
                   (1.0 - t) * p0.translation + t * p1.translation, stamp);
}

RigidPose interpolate_camera_pose(const std::vector<RigidPose>& trajectory,
                                  double t_cam) {
  if (trajectory.empty() || !trajectory.front().timestamp) {
    throw OutOfRange("empty or unstamped trajectory");
  }
  const double t_first = *trajectory.front().timestamp;
  const double t_last = *trajectory.back().timestamp;
  if (t_cam < t_first || t_cam > t_last) {
    throw OutOfRange("timestamp " + std::to_string(t_cam) +
                     " outside trajectory span [" + std::to_string(t_first) +
                     ", " + std::to_string(t_last) + "]");
  }
  auto it = std::lower_bound(
      trajectory.begin(), trajectory.end(), t_cam,
      [](const RigidPose& p, double t) { return *p.timestamp < t; });
  if (it != trajectory.end() && *it->timestamp == t_cam) {
    return *it;
  }
  const RigidPose& hi = *it;
  const RigidPose& lo = *(it - 1);
  const double span = *hi.timestamp - *lo.timestamp;
  const double t = (t_cam - *lo.timestamp) / span;
  return slerp_pose(lo, hi, t);
}

}  // namespace cracklab
