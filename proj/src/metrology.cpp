#include "cracklab/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cracklab/errors.hpp"
#include "cracklab/kdtree.hpp"

namespace cracklab {

namespace {

// bilinear occupancy of a binary mask at a continuous position;
// out-of-image corners count as background
double occupancy(const BinaryMask& mask, double u, double v) {
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fu = u - x0, fv = v - y0;
  auto val = [&](int x, int y) -> double {
    return mask.in_bounds(x, y) ? mask.at(x, y) : 0.0;
  };
  return val(x0, y0) * (1 - fu) * (1 - fv) + val(x0 + 1, y0) * fu * (1 - fv) +
         val(x0, y0 + 1) * (1 - fu) * fv + val(x0 + 1, y0 + 1) * fu * fv;
}

}  // namespace

Eigen::Vector2d skeleton_direction(const BinaryMask& skeleton,
                                   const Pixel& seed, int window,
                                   double gaussian_sigma) {
  const int su = static_cast<int>(std::lround(seed.u));
  const int sv = static_cast<int>(std::lround(seed.v));
  bool near_skeleton = false;
  for (int dy = -2; dy <= 2 && !near_skeleton; ++dy) {
    for (int dx = -2; dx <= 2 && !near_skeleton; ++dx) {
      if (skeleton.in_bounds(su + dx, sv + dy) &&
          skeleton.at(su + dx, sv + dy)) {
        near_skeleton = true;
      }
    }
  }
  if (!near_skeleton) {
    throw SeedOffSkeleton("seed is more than 2 px from the skeleton");
  }

  // pad the patch so blur and Sobel inside the window never see the ridge
  // truncated at the patch border
  const int kr = std::max(1, static_cast<int>(std::ceil(3 * gaussian_sigma)));
  const int half = window / 2 + kr + 2;
  const int w = 2 * half + 1;
  const int margin = kr + 2;
  std::vector<double> patch(static_cast<std::size_t>(w) * w, 0.0);
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) {
      const int px = su - half + x, py = sv - half + y;
      if (skeleton.in_bounds(px, py) && skeleton.at(px, py)) {
        patch[static_cast<std::size_t>(y) * w + x] = 1.0;
      }
    }
  }

  // separable Gaussian blur
  std::vector<double> kernel(2 * kr + 1);
  double ksum = 0;
  for (int i = -kr; i <= kr; ++i) {
    kernel[i + kr] = std::exp(-0.5 * i * i / (gaussian_sigma * gaussian_sigma));
    ksum += kernel[i + kr];
  }
  for (auto& k : kernel) k /= ksum;
  std::vector<double> tmp(patch.size()), blur(patch.size());
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -kr; i <= kr; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        s += kernel[i + kr] * patch[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -kr; i <= kr; ++i) {
        const int yy = std::clamp(y + i, 0, w - 1);
        s += kernel[i + kr] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      blur[static_cast<std::size_t>(y) * w + x] = s;
    }
  }

  // Sobel mean gradient over pixels near the skeleton
  auto b = [&](int x, int y) {
    return blur[static_cast<std::size_t>(std::clamp(y, 0, w - 1)) * w +
                std::clamp(x, 0, w - 1)];
  };
  std::vector<Eigen::Vector2d> grads;
  for (int y = margin; y < w - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      bool adjacent = false;
      for (int dy = -1; dy <= 1 && !adjacent; ++dy) {
        for (int dx = -1; dx <= 1 && !adjacent; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx >= 0 && nx < w && ny >= 0 && ny < w &&
              patch[static_cast<std::size_t>(ny) * w + nx] > 0.5) {
            adjacent = true;
          }
        }
      }
      if (!adjacent) continue;
      const double gx = (b(x + 1, y - 1) + 2 * b(x + 1, y) + b(x + 1, y + 1)) -
                        (b(x - 1, y - 1) + 2 * b(x - 1, y) + b(x - 1, y + 1));
      const double gy = (b(x - 1, y + 1) + 2 * b(x, y + 1) + b(x + 1, y + 1)) -
                        (b(x - 1, y - 1) + 2 * b(x, y - 1) + b(x + 1, y - 1));
      grads.emplace_back(gx, gy);
    }
  }
  if (grads.empty()) throw SeedOffSkeleton("empty direction window");
  // the two sides of the ridge carry opposite gradients: flip each onto the
  // strongest one before averaging so they reinforce instead of cancel
  Eigen::Vector2d ref = Eigen::Vector2d::Zero();
  for (const auto& g : grads) {
    if (g.norm() > ref.norm()) ref = g;
  }
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  for (const auto& g : grads) grad += g.dot(ref) >= 0 ? g : -g;
  grad /= static_cast<double>(grads.size());
  if (grad.norm() < 1e-12) throw ZeroGradient("flat direction neighborhood");
  Eigen::Vector2d dir(-grad.y(), grad.x());  // rotate 90 degrees
  return dir.normalized();
}

std::pair<Pixel, Pixel> trace_edges(const BinaryMask& mask, const Pixel& seed,
                                    const Eigen::Vector2d& direction) {
  if (occupancy(mask, seed.u, seed.v) < 0.5) {
    throw SeedOutsideMask("seed occupancy below 0.5");
  }
  const Eigen::Vector2d perp(-direction.y(), direction.x());
  constexpr double kStep = 0.25;

  auto march = [&](double sign) {
    double t = 0;
    double last_inside = 0;
    while (true) {
      const double nt = t + kStep;
      const double u = seed.u + sign * nt * perp.x();
      const double v = seed.v + sign * nt * perp.y();
      if (u < 0 || v < 0 || u > mask.width - 1 || v > mask.height - 1) {
        throw OpenBoundary("edge march left the image inside the mask");
      }
      if (occupancy(mask, u, v) >= 0.5) {
        last_inside = nt;
        t = nt;
      } else {
        break;
      }
    }
    return Pixel{seed.u + sign * last_inside * perp.x(),
                 seed.v + sign * last_inside * perp.y()};
  };
  // +perp is "left" of the travel direction
  return {march(+1.0), march(-1.0)};
}

LocalPlane fit_local_plane(const PointCloud& cloud, const Vec3& ray_origin,
                           const Vec3& ray_direction, std::size_t k,
                           double miss_tolerance) {
  if (cloud.empty()) throw RayMiss("empty cloud");
  const Vec3 dir = ray_direction.normalized();

  std::size_t anchor = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 rel = cloud.points[i] - ray_origin;
    const double along = rel.dot(dir);
    const double d = along > 0 ? (rel - along * dir).norm() : rel.norm();
    if (d < best) {
      best = d;
      anchor = i;
    }
  }
  if (best >= miss_tolerance) {
    throw RayMiss("nearest cloud point is " + std::to_string(best) +
                  " m off the ray");
  }

  KdTree tree(cloud.points);
  auto nb = tree.knn(cloud.points[anchor], std::min(k, cloud.size() - 1),
                     anchor);
  nb.push_back(anchor);

  Vec3 centroid = Vec3::Zero();
  for (std::size_t j : nb) centroid += cloud.points[j];
  centroid /= static_cast<double>(nb.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t j : nb) {
    const Vec3 d = cloud.points[j] - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (eig.eigenvalues()(1) <= 1e-18 * std::max(1.0, eig.eigenvalues()(2))) {
    throw DegenerateNeighborhood("collinear plane neighborhood");
  }
  Vec3 n = eig.eigenvectors().col(0);
  if (n.z() < 0) n = -n;

  LocalPlane plane;
  plane.a = n.x();
  plane.b = n.y();
  plane.c = n.z();
  plane.d = -n.dot(centroid);
  plane.support = nb.size();
  double ss = 0;
  for (std::size_t j : nb) {
    const double r = plane.signed_distance(cloud.points[j]);
    ss += r * r;
  }
  plane.rms = std::sqrt(ss / static_cast<double>(nb.size()));
  return plane;
}

PointCloud sample_plane_points(const LocalPlane& plane, const Vec3& center,
                               double radius, double step) {
  // permute axes so the normal's largest component divides
  int zi = 0;
  const double comp[3] = {std::abs(plane.a), std::abs(plane.b),
                          std::abs(plane.c)};
  if (comp[1] > comp[zi]) zi = 1;
  if (comp[2] > comp[zi]) zi = 2;
  const int xi = (zi + 1) % 3, yi = (zi + 2) % 3;
  const double n[3] = {plane.a, plane.b, plane.c};

  const int half = static_cast<int>(std::floor(radius / step + 1e-9));
  PointCloud out;
  out.points.reserve(static_cast<std::size_t>(2 * half + 1) *
                     (2 * half + 1));
  for (int iy = -half; iy <= half; ++iy) {
    for (int ix = -half; ix <= half; ++ix) {
      double p[3];
      p[xi] = center(xi) + ix * step;
      p[yi] = center(yi) + iy * step;
      p[zi] = (-n[xi] * p[xi] - n[yi] * p[yi] - plane.d) / n[zi];
      out.points.emplace_back(p[0], p[1], p[2]);
    }
  }
  return out;
}

EdgeLift find_3d_edge(const PointCloud& samples, const Pixel& target,
                      const CameraModel& cam, const RigidPose& camera_pose) {
  const RigidPose world_to_cam = camera_pose.inverse();
  EdgeLift best;
  best.pixel_error = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vec3 p_cam = transform_point(world_to_cam, samples.points[i]);
    if (p_cam.z() <= 0) continue;
    const Pixel px = project(cam, p_cam);
    const double du = px.u - target.u, dv = px.v - target.v;
    const double err = std::sqrt(du * du + dv * dv);
    if (err < best.pixel_error) {
      best.pixel_error = err;
      best.point = samples.points[i];
      best.sample_index = i;
      found = true;
    }
  }
  if (!found) throw NoProjectableSamples("all samples behind the camera");
  return best;
}

CrackMeasurement measure_crack(const PointCloud& cloud, const BinaryMask& mask,
                               const BinaryMask& skeleton, const Pixel& seed,
                               const CameraModel& cam,
                               const RigidPose& camera_pose,
                               const MetrologyParams& params) {
  CrackMeasurement m;
  m.seed = seed;
  m.direction = skeleton_direction(skeleton, seed, params.window,
                                   params.gaussian_sigma);
  auto [left, right] = trace_edges(mask, seed, m.direction);
  m.edge_left_2d = left;
  m.edge_right_2d = right;

  const Vec3 ray_cam((seed.u - cam.cx) / cam.fx, (seed.v - cam.cy) / cam.fy,
                     1.0);
  const Vec3 ray_dir = (camera_pose.rotation * ray_cam).normalized();
  m.plane = fit_local_plane(cloud, camera_pose.translation, ray_dir,
                            params.plane_k, params.ray_miss_tolerance);

  const Vec3 n = m.plane.normal();
  const double denom = n.dot(ray_dir);
  Vec3 center;
  if (std::abs(denom) > 1e-9) {
    const double t = -(n.dot(camera_pose.translation) + m.plane.d) / denom;
    center = camera_pose.translation + t * ray_dir;
  } else {
    // grazing ray: fall back to the plane's closest point to the camera
    center = camera_pose.translation -
             m.plane.signed_distance(camera_pose.translation) * n;
  }
  const PointCloud samples =
      sample_plane_points(m.plane, center, params.sample_radius,
                          params.sample_step);

  m.edge_left_3d = find_3d_edge(samples, m.edge_left_2d, cam, camera_pose).point;
  m.edge_right_3d =
      find_3d_edge(samples, m.edge_right_2d, cam, camera_pose).point;
  m.width = (m.edge_left_3d - m.edge_right_3d).norm();
  return m;
}

ErrorStats compute_error_stats(
    const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw EmptyInput("no (calculated, reference) pairs");
  double mae = 0, mre = 0;
  for (const auto& [calc, ref] : pairs) {
    if (ref <= 0) throw NonPositiveReference("reference must be positive");
    mae += std::abs(calc - ref);
    mre += std::abs(calc - ref) / ref * 100.0;
  }
  const double n = static_cast<double>(pairs.size());
  return {mae / n, mre / n};
}

}  // namespace cracklab
