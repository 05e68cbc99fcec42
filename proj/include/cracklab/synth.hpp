#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cracklab/image.hpp"
#include "cracklab/point_cloud.hpp"

namespace cracklab {

enum class SurfaceKind { Plane, Box, Cylinder };

/// Crack centerline in surface parameter space (s, t) in meters, with a
/// width per vertex (linearly interpolated along segments).
struct CrackBand {
  std::vector<Eigen::Vector2d> centerline;
  std::vector<double> widths;  // meters, parallel to centerline
};

struct SceneSpec {
  SurfaceKind surface = SurfaceKind::Plane;
  // plane: extent_s x extent_t at z=0
  // box: extent_s x extent_t footprint, depth below z=0
  // cylinder: radius, height extent_t; extent_s is arc length
  double extent_s = 1.0;
  double extent_t = 1.0;
  double depth = 0.3;    // box only
  double radius = 0.15;  // cylinder only

  std::vector<CrackBand> cracks;
  double crack_darkening = 0.15;  // crack intensity multiplier

  double texture_scale = 0.02;  // value-noise lattice pitch, meters
  int texture_octaves = 3;
  std::uint64_t texture_seed = 1;

  double cloud_spacing = 0.001;  // meters
  double noise_sigma = 0.0;      // along-normal Gaussian, meters
  std::uint64_t rng_seed = 1;

  CameraModel camera;
  std::vector<RigidPose> camera_path;  // camera-to-world, timestamped
};

struct GroundTruth {
  RigidPose extrinsic;             // LiDAR-to-world (identity here)
  std::vector<std::uint8_t> labels;  // per cloud point, 1 = crack
  SceneSpec spec;                  // retained for analytic queries
};

struct SyntheticScene {
  PointCloud cloud;  // intensity = texture value at the sample
  Trajectory trajectory;
  std::vector<RasterImage> images;  // grayscale
  std::vector<BinaryMask> masks;
  GroundTruth truth;
};

/// Deterministic scene generation; identical specs (including seeds)
/// produce identical outputs.
SyntheticScene generate_scene(const SceneSpec& spec);

/// Analytic surface point and outward normal at parameters (s, t).
Vec3 surface_point(const SceneSpec& spec, double s, double t);
Vec3 surface_normal(const SceneSpec& spec, double s, double t);

/// Ray/surface intersection returning parameters; false on miss.
bool raycast_surface(const SceneSpec& spec, const Vec3& origin,
                     const Vec3& direction, double* s, double* t);

/// Band-limited value noise in [0, 1], deterministic in the seed.
double texture_value(const SceneSpec& spec, double s, double t);

/// True crack half-band test plus the interpolated width at the nearest
/// centerline point. Returns false when (s, t) is outside every band.
bool crack_band_at(const SceneSpec& spec, double s, double t,
                   double* width = nullptr);

/// True band width under a mask pixel of the given frame.
double ground_truth_width_at(const GroundTruth& gt, const Pixel& pixel,
                             std::size_t frame);

}  // namespace cracklab
