#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cracklab/image.hpp"
#include "cracklab/point_cloud.hpp"

namespace cracklab {

/// Joint intensity histogram between projected LiDAR returns and image
/// pixels, with its two marginals. Row index = LiDAR bin, column = image.
struct JointHistogram {
  int bins = 32;
  std::vector<std::uint64_t> joint;           // bins x bins, row-major
  std::vector<std::uint64_t> marginal_lidar;  // row sums
  std::vector<std::uint64_t> marginal_image;  // column sums
  std::uint64_t total = 0;

  std::uint64_t& at(int l, int i) { return joint[l * bins + i]; }
  std::uint64_t at(int l, int i) const { return joint[l * bins + i]; }
};

/// Bins LiDAR intensity against image intensity at the projected pixel of
/// every visible point. LiDAR intensities are normalized by the cloud's
/// maximum before binning; image samples use the nearest pixel.
JointHistogram build_histograms(const PointCloud& cloud,
                                const RasterImage& image,
                                const CameraModel& cam,
                                const RigidPose& extrinsic, int bins = 32);

/// Shannon entropy in nats of a count histogram.
double entropy(const std::vector<std::uint64_t>& counts);

/// Normalized information distance in [0,1] from a joint histogram.
double nid(const JointHistogram& hist);

struct NelderMeadConfig {
  Eigen::Matrix<double, 6, 1> initial_step =
      (Eigen::Matrix<double, 6, 1>() << 0.01, 0.01, 0.01, 0.01, 0.01, 0.01)
          .finished();
  int max_iters = 300;
  double simplex_tolerance = 1e-7;
};

using Vec6 = Eigen::Matrix<double, 6, 1>;

struct NelderMeadResult {
  Vec6 x_min;
  double f_min = 0;
  int iterations = 0;
};

/// Downhill simplex with the standard coefficients (reflect 1, expand 2,
/// contract 0.5, shrink 0.5). Stops at max_iters or when the simplex
/// diameter drops below the tolerance.
NelderMeadResult nelder_mead_minimize(
    const std::function<double(const Vec6&)>& objective, const Vec6& x0,
    const NelderMeadConfig& cfg);

struct CalibConfig {
  int bins = 32;
  NelderMeadConfig optimizer;
};

struct CalibFrame {
  RasterImage image;       // grayscale
  RigidPose lidar_pose;    // world pose of the LiDAR at image time
};

/// Refines a LiDAR-to-camera extrinsic by minimizing the mean NID over the
/// given frames. The optimizer works in a local perturbation chart
/// (rotation vector, translation) around the initial estimate.
RigidPose refine_extrinsic(const PointCloud& cloud,
                           const std::vector<CalibFrame>& frames,
                           const CameraModel& cam, const RigidPose& initial,
                           const CalibConfig& cfg);

/// Mean NID of an extrinsic over frames (diagnostic; used by the refiner).
double mean_nid(const PointCloud& cloud, const std::vector<CalibFrame>& frames,
                const CameraModel& cam, const RigidPose& extrinsic, int bins);

}  // namespace cracklab
