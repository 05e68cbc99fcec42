#include "cracklab/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "cracklab/errors.hpp"
#include "cracklab/hull.hpp"

namespace cracklab {

std::vector<std::size_t> hpr_visible(const PointCloud& cloud,
                                     const Vec3& camera_position,
                                     double radius_scale) {
  if (cloud.size() < 4) {
    throw TooFewPoints("HPR needs at least 4 points for a 3D hull");
  }
  std::vector<Vec3> rel(cloud.size());
  double max_norm = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    rel[i] = cloud.points[i] - camera_position;
    const double d = rel[i].norm();
    if (d <= 1e-9) {
      throw DegeneratePoint("point coincides with the camera center");
    }
    max_norm = std::max(max_norm, d);
  }
  const double radius = radius_scale * max_norm;

  std::vector<Vec3> inverted(cloud.size() + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = rel[i].norm();
    inverted[i] = rel[i] + 2.0 * (radius - d) * rel[i] / d;
  }
  inverted[cloud.size()] = Vec3::Zero();  // camera center joins the hull

  std::vector<std::size_t> visible;
  for (std::size_t idx : convex_hull_vertices(inverted)) {
    if (idx < cloud.size()) visible.push_back(idx);
  }
  return visible;
}

double score_orientation(const Vec3& point, const RigidPose& camera_pose) {
  const Vec3 to_point = point - camera_pose.translation;
  const double d = to_point.norm();
  if (d <= 1e-12) throw DegeneratePoint("point at the camera center");
  const Vec3 axis = camera_pose.rotation * Vec3::UnitZ();
  return to_point.dot(axis) / d;
}

double score_distance(const Vec3& point, const Vec3& camera_position,
                      double ideal_distance, double sigma) {
  const double d = (point - camera_position).norm() - ideal_distance;
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

std::vector<std::vector<ViewObservation>> accumulate_observations(
    const PointCloud& cloud, const std::vector<FusionFrame>& frames,
    const CameraModel& cam, const FusionConfig& cfg) {
  std::vector<std::vector<ViewObservation>> obs(cloud.size());

  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const FusionFrame& frame = frames[fi];
    const RigidPose world_to_cam = frame.camera_pose.inverse();

    std::vector<std::size_t> visible;
    try {
      visible = hpr_visible(cloud, frame.camera_pose.translation,
                            cfg.hpr_radius_scale);
    } catch (const TooFewPoints&) {
      visible.resize(cloud.size());
      for (std::size_t i = 0; i < cloud.size(); ++i) visible[i] = i;
    } catch (const Error&) {
      continue;  // frame contributes nothing
    }

    for (std::size_t idx : visible) {
      const Vec3 p_cam = transform_point(world_to_cam, cloud.points[idx]);
      if (p_cam.z() <= 0) continue;
      const Pixel px = project(cam, p_cam);
      const int x = static_cast<int>(std::lround(px.u));
      const int y = static_cast<int>(std::lround(px.v));
      if (!frame.image.in_bounds(x, y)) continue;

      ViewObservation o;
      o.frame_id = static_cast<int>(fi);
      if (frame.image.channels == 3) {
        o.color = {frame.image.at(x, y, 0), frame.image.at(x, y, 1),
                   frame.image.at(x, y, 2)};
      } else {
        const std::uint8_t g = frame.image.at(x, y);
        o.color = {g, g, g};
      }
      if (frame.mask.width == frame.image.width &&
          frame.mask.height == frame.image.height) {
        o.label = frame.mask.at(x, y);
      }
      o.score_orientation = score_orientation(cloud.points[idx],
                                              frame.camera_pose);
      o.score_distance = score_distance(cloud.points[idx],
                                        frame.camera_pose.translation,
                                        cfg.ideal_distance, cfg.sigma);
      o.weight = cfg.lambda1 * o.score_orientation +
                 cfg.lambda2 * o.score_distance;
      obs[idx].push_back(o);
    }
  }
  return obs;
}

FusedPoint fuse_point(std::vector<ViewObservation> observations,
                      const FusionConfig& cfg) {
  FusedPoint out;
  if (observations.empty()) return out;

  std::sort(observations.begin(), observations.end(),
            [](const ViewObservation& a, const ViewObservation& b) {
              if (a.weight != b.weight) return a.weight > b.weight;
              return a.frame_id < b.frame_id;
            });
  const std::size_t kept =
      std::min<std::size_t>(observations.size(),
                            static_cast<std::size_t>(cfg.top_n));

  double wsum = 0, csum[3] = {0, 0, 0}, lsum = 0;
  for (std::size_t i = 0; i < kept; ++i) {
    const auto& o = observations[i];
    wsum += o.weight;
    for (int c = 0; c < 3; ++c) csum[c] += o.weight * o.color[c];
    if (o.label) lsum += o.weight;
  }
  out.support = kept;
  if (wsum <= 0) {
    // pathological all-nonpositive weights: plain average
    out.has_color = true;
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < kept; ++i) s += observations[i].color[c];
      out.color[c] = static_cast<std::uint8_t>(
          std::clamp(std::floor(s / kept + 0.5), 0.0, 255.0));
    }
    return out;
  }
  out.has_color = true;
  for (int c = 0; c < 3; ++c) {
    out.color[c] = static_cast<std::uint8_t>(
        std::clamp(std::floor(csum[c] / wsum + 0.5), 0.0, 255.0));
  }
  out.label = lsum / wsum >= 0.5 ? 1 : 0;
  return out;
}

FuseResult fuse_cloud(const PointCloud& cloud,
                      const std::vector<FusionFrame>& frames,
                      const CameraModel& cam, const FusionConfig& cfg) {
  const auto obs = accumulate_observations(cloud, frames, cam, cfg);
  FuseResult result;
  result.cloud = cloud;
  result.cloud.color.assign(cloud.size(), Rgb{0, 0, 0});
  result.cloud.label.assign(cloud.size(), 0);
  result.support.assign(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const FusedPoint fp = fuse_point(obs[i], cfg);
    result.cloud.color[i] = fp.color;
    result.cloud.label[i] = fp.label;
    result.support[i] = fp.support;
  }
  return result;
}

}  // namespace cracklab
