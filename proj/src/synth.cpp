#include "cracklab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cracklab/errors.hpp"

namespace cracklab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice_value(std::uint64_t seed, std::int64_t xi, std::int64_t yi) {
  const std::uint64_t h = splitmix64(
      seed ^ splitmix64(static_cast<std::uint64_t>(xi) * 0xC2B2AE3D27D4EB4Full ^
                        static_cast<std::uint64_t>(yi)));
  return static_cast<double>(h >> 11) / 9007199254740992.0;  // [0,1)
}

double fade(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const std::int64_t xi = static_cast<std::int64_t>(fx);
  const std::int64_t yi = static_cast<std::int64_t>(fy);
  const double tx = fade(x - fx), ty = fade(y - fy);
  const double v00 = lattice_value(seed, xi, yi);
  const double v10 = lattice_value(seed, xi + 1, yi);
  const double v01 = lattice_value(seed, xi, yi + 1);
  const double v11 = lattice_value(seed, xi + 1, yi + 1);
  return (v00 * (1 - tx) + v10 * tx) * (1 - ty) +
         (v01 * (1 - tx) + v11 * tx) * ty;
}

void validate(const SceneSpec& spec) {
  if (spec.extent_s <= 0 || spec.extent_t <= 0) {
    throw InvalidSpec("surface extents must be positive");
  }
  if (spec.surface == SurfaceKind::Cylinder && spec.radius <= 0) {
    throw InvalidSpec("cylinder radius must be positive");
  }
  if (spec.cloud_spacing <= 0) {
    throw InvalidSpec("cloud spacing must be positive");
  }
  for (const auto& band : spec.cracks) {
    if (band.centerline.empty() ||
        band.centerline.size() != band.widths.size()) {
      throw InvalidSpec("crack band needs matching centerline and widths");
    }
    for (double w : band.widths) {
      if (w <= 0) throw InvalidSpec("crack width must be positive");
    }
  }
  for (std::size_t i = 1; i < spec.camera_path.size(); ++i) {
    if (!spec.camera_path[i - 1].timestamp || !spec.camera_path[i].timestamp ||
        *spec.camera_path[i].timestamp <= *spec.camera_path[i - 1].timestamp) {
      throw InvalidSpec("camera path timestamps must increase");
    }
  }
  if (!spec.camera_path.empty() && !spec.camera.valid()) {
    throw InvalidSpec("camera intrinsics invalid");
  }
}

}  // namespace

Vec3 surface_point(const SceneSpec& spec, double s, double t) {
  switch (spec.surface) {
    case SurfaceKind::Plane:
    case SurfaceKind::Box:
      return {s, t, 0.0};
    case SurfaceKind::Cylinder: {
      const double theta = (s - spec.extent_s / 2.0) / spec.radius;
      return {spec.radius * std::sin(theta), t,
              spec.radius * std::cos(theta) - spec.radius};
    }
  }
  return Vec3::Zero();
}

Vec3 surface_normal(const SceneSpec& spec, double s, double t) {
  (void)t;
  switch (spec.surface) {
    case SurfaceKind::Plane:
    case SurfaceKind::Box:
      return Vec3::UnitZ();
    case SurfaceKind::Cylinder: {
      const double theta = (s - spec.extent_s / 2.0) / spec.radius;
      return {std::sin(theta), 0.0, std::cos(theta)};
    }
  }
  return Vec3::UnitZ();
}

bool raycast_surface(const SceneSpec& spec, const Vec3& origin,
                     const Vec3& direction, double* s, double* t) {
  switch (spec.surface) {
    case SurfaceKind::Plane:
    case SurfaceKind::Box: {
      if (std::abs(direction.z()) < 1e-12) return false;
      const double lambda = -origin.z() / direction.z();
      if (lambda <= 0) return false;
      const double hs = origin.x() + lambda * direction.x();
      const double ht = origin.y() + lambda * direction.y();
      if (hs < 0 || hs > spec.extent_s || ht < 0 || ht > spec.extent_t) {
        return false;
      }
      *s = hs;
      *t = ht;
      return true;
    }
    case SurfaceKind::Cylinder: {
      // axis along y through (0, *, -radius)
      const double ox = origin.x(), oz = origin.z() + spec.radius;
      const double dx = direction.x(), dz = direction.z();
      const double a = dx * dx + dz * dz;
      if (a < 1e-18) return false;
      const double b = 2.0 * (ox * dx + oz * dz);
      const double c = ox * ox + oz * oz - spec.radius * spec.radius;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) return false;
      const double sq = std::sqrt(disc);
      for (double lambda : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (lambda <= 0) continue;
        const double hx = ox + lambda * dx;
        const double hz = oz + lambda * dz;
        if (hz <= 0) continue;  // back side
        const double theta = std::atan2(hx, hz);
        const double hs = theta * spec.radius + spec.extent_s / 2.0;
        const double ht = origin.y() + lambda * direction.y();
        if (hs < 0 || hs > spec.extent_s || ht < 0 || ht > spec.extent_t) {
          continue;
        }
        *s = hs;
        *t = ht;
        return true;
      }
      return false;
    }
  }
  return false;
}

double texture_value(const SceneSpec& spec, double s, double t) {
  double value = 0, amp = 0.5, freq = 1.0 / spec.texture_scale;
  for (int o = 0; o < spec.texture_octaves; ++o) {
    value += amp * value_noise(spec.texture_seed + o, s * freq, t * freq);
    amp *= 0.5;
    freq *= 2.0;
  }
  const double max_amp = 1.0 - std::pow(0.5, spec.texture_octaves);
  return std::clamp(value / max_amp, 0.0, 1.0);
}

bool crack_band_at(const SceneSpec& spec, double s, double t, double* width) {
  const Eigen::Vector2d p(s, t);
  bool inside = false;
  double best_margin = std::numeric_limits<double>::infinity();
  double best_width = 0;
  for (const auto& band : spec.cracks) {
    const std::size_t n = band.centerline.size();
    for (std::size_t i = 0; i + 1 < n || (n == 1 && i == 0); ++i) {
      double dist, w;
      if (n == 1) {
        dist = (p - band.centerline[0]).norm();
        w = band.widths[0];
      } else {
        const Eigen::Vector2d a = band.centerline[i];
        const Eigen::Vector2d b = band.centerline[i + 1];
        const Eigen::Vector2d ab = b - a;
        const double len2 = ab.squaredNorm();
        double tau = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
        tau = std::clamp(tau, 0.0, 1.0);
        dist = (p - (a + tau * ab)).norm();
        w = band.widths[i] + tau * (band.widths[i + 1] - band.widths[i]);
      }
      const double margin = dist - w / 2.0;
      if (margin < best_margin) {
        best_margin = margin;
        best_width = w;
      }
      if (margin <= 0) inside = true;
      if (n == 1) break;
    }
  }
  if (width) *width = best_width;
  return inside;
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  validate(spec);
  SyntheticScene scene;
  scene.truth.spec = spec;
  scene.truth.extrinsic = RigidPose::identity();

  // cloud
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int ns = static_cast<int>(std::floor(spec.extent_s /
                                             spec.cloud_spacing + 1e-9)) + 1;
  const int nt = static_cast<int>(std::floor(spec.extent_t /
                                             spec.cloud_spacing + 1e-9)) + 1;
  scene.cloud.points.reserve(static_cast<std::size_t>(ns) * nt);
  scene.cloud.intensity.reserve(scene.cloud.points.capacity());
  scene.truth.labels.reserve(scene.cloud.points.capacity());
  for (int it = 0; it < nt; ++it) {
    for (int is = 0; is < ns; ++is) {
      const double s = is * spec.cloud_spacing;
      const double t = it * spec.cloud_spacing;
      Vec3 p = surface_point(spec, s, t);
      if (spec.noise_sigma > 0) {
        p += spec.noise_sigma * gauss(rng) * surface_normal(spec, s, t);
      }
      const bool on_crack = crack_band_at(spec, s, t);
      double intensity = texture_value(spec, s, t);
      if (on_crack) intensity *= spec.crack_darkening;
      scene.cloud.points.push_back(p);
      scene.cloud.intensity.push_back(static_cast<float>(intensity));
      scene.truth.labels.push_back(on_crack ? 1 : 0);
    }
  }

  // frames
  scene.trajectory.entries = spec.camera_path;
  for (const auto& pose : spec.camera_path) {
    RasterImage img = RasterImage::gray(spec.camera.width, spec.camera.height);
    img.timestamp = pose.timestamp;
    BinaryMask mask(spec.camera.width, spec.camera.height);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const Vec3 dir_cam((x - spec.camera.cx) / spec.camera.fx,
                           (y - spec.camera.cy) / spec.camera.fy, 1.0);
        const Vec3 dir = (pose.rotation * dir_cam).normalized();
        double s, t;
        if (!raycast_surface(spec, pose.translation, dir, &s, &t)) continue;
        const bool on_crack = crack_band_at(spec, s, t);
        double intensity = texture_value(spec, s, t);
        if (on_crack) intensity *= spec.crack_darkening;
        img.at(x, y) = static_cast<std::uint8_t>(
            std::clamp(std::lround(intensity * 255.0), 0l, 255l));
        if (on_crack) mask.at(x, y) = 1;
      }
    }
    scene.images.push_back(std::move(img));
    scene.masks.push_back(std::move(mask));
  }
  return scene;
}

double ground_truth_width_at(const GroundTruth& gt, const Pixel& pixel,
                             std::size_t frame) {
  if (frame >= gt.spec.camera_path.size()) {
    throw OutOfRange("frame index out of range");
  }
  const RigidPose& pose = gt.spec.camera_path[frame];
  const Vec3 dir_cam((pixel.u - gt.spec.camera.cx) / gt.spec.camera.fx,
                     (pixel.v - gt.spec.camera.cy) / gt.spec.camera.fy, 1.0);
  const Vec3 dir = (pose.rotation * dir_cam).normalized();
  double s, t;
  if (!raycast_surface(gt.spec, pose.translation, dir, &s, &t)) {
    throw NotOnCrack("pixel ray misses the surface");
  }
  double width;
  if (!crack_band_at(gt.spec, s, t, &width)) {
    throw NotOnCrack("pixel lies outside every crack band");
  }
  return width;
}

}  // namespace cracklab
