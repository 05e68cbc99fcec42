#include "cracklab/calib.hpp"

#include <algorithm>
#include <cmath>

namespace cracklab {

namespace {

int intensity_bin(double v01, int bins) {
  int b = static_cast<int>(v01 * bins);
  return std::clamp(b, 0, bins - 1);
}

double gray_at(const RasterImage& img, int x, int y) {
  if (img.channels == 3) {
    return (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
  }
  return img.at(x, y);
}

}  // namespace

JointHistogram build_histograms(const PointCloud& cloud,
                                const RasterImage& image,
                                const CameraModel& cam,
                                const RigidPose& extrinsic, int bins) {
  if (!cloud.has_intensity()) {
    throw EmptyHistogram("cloud carries no intensity channel");
  }
  float max_i = 0;
  for (float v : cloud.intensity) max_i = std::max(max_i, v);
  const double scale = max_i > 0 ? 1.0 / max_i : 1.0;

  JointHistogram hist;
  hist.bins = bins;
  hist.joint.assign(static_cast<std::size_t>(bins) * bins, 0);
  hist.marginal_lidar.assign(bins, 0);
  hist.marginal_image.assign(bins, 0);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 p_cam = transform_point(extrinsic, cloud.points[i]);
    if (p_cam.z() <= 0) continue;
    const Pixel px = project(cam, p_cam);
    const int x = static_cast<int>(std::lround(px.u));
    const int y = static_cast<int>(std::lround(px.v));
    if (!image.in_bounds(x, y)) continue;
    const int lb = intensity_bin(cloud.intensity[i] * scale, bins);
    const int ib = intensity_bin(gray_at(image, x, y) / 255.0, bins);
    ++hist.at(lb, ib);
    ++hist.marginal_lidar[lb];
    ++hist.marginal_image[ib];
    ++hist.total;
  }
  if (hist.total == 0) {
    throw NoVisiblePoints("no points project into the image frame");
  }
  return hist;
}

double entropy(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw EmptyHistogram("entropy of empty histogram");
  double h = 0;
  const double inv = 1.0 / static_cast<double>(total);
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) * inv;
    h -= p * std::log(p);
  }
  return h;
}

double nid(const JointHistogram& hist) {
  const double h_joint = entropy(hist.joint);
  if (h_joint == 0.0) {
    throw DegenerateJoint("joint entropy is zero");
  }
  const double h_l = entropy(hist.marginal_lidar);
  const double h_i = entropy(hist.marginal_image);
  const double mi = h_l + h_i - h_joint;
  return std::clamp((h_joint - mi) / h_joint, 0.0, 1.0);
}

NelderMeadResult nelder_mead_minimize(
    const std::function<double(const Vec6&)>& objective, const Vec6& x0,
    const NelderMeadConfig& cfg) {
  constexpr int kDim = 6;
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5,
                   kShrink = 0.5;

  auto eval = [&](const Vec6& x) {
    const double f = objective(x);
    if (!std::isfinite(f)) {
      throw NonFiniteObjective("objective not finite");
    }
    return f;
  };

  std::vector<Vec6> v(kDim + 1, x0);
  std::vector<double> f(kDim + 1);
  f[0] = eval(x0);
  for (int i = 0; i < kDim; ++i) {
    v[i + 1](i) += cfg.initial_step(i);
    f[i + 1] = eval(v[i + 1]);
  }

  auto order = [&] {
    std::vector<int> idx(kDim + 1);
    for (int i = 0; i <= kDim; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return f[a] < f[b]; });
    std::vector<Vec6> v2(kDim + 1);
    std::vector<double> f2(kDim + 1);
    for (int i = 0; i <= kDim; ++i) {
      v2[i] = v[idx[i]];
      f2[i] = f[idx[i]];
    }
    v = std::move(v2);
    f = std::move(f2);
  };

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    order();
    double diameter = 0;
    for (int i = 1; i <= kDim; ++i) {
      diameter = std::max(diameter, (v[i] - v[0]).norm());
    }
    if (diameter < cfg.simplex_tolerance) break;

    Vec6 centroid = Vec6::Zero();
    for (int i = 0; i < kDim; ++i) centroid += v[i];
    centroid /= kDim;

    const Vec6 xr = centroid + kReflect * (centroid - v[kDim]);
    const double fr = eval(xr);
    if (fr < f[0]) {
      const Vec6 xe = centroid + kExpand * (centroid - v[kDim]);
      const double fe = eval(xe);
      if (fe < fr) {
        v[kDim] = xe;
        f[kDim] = fe;
      } else {
        v[kDim] = xr;
        f[kDim] = fr;
      }
    } else if (fr < f[kDim - 1]) {
      v[kDim] = xr;
      f[kDim] = fr;
    } else {
      const bool outside = fr < f[kDim];
      const Vec6 base = outside ? xr : v[kDim];
      const Vec6 xc = centroid + kContract * (base - centroid);
      const double fc = eval(xc);
      if (fc < std::min(fr, f[kDim])) {
        v[kDim] = xc;
        f[kDim] = fc;
      } else {
        for (int i = 1; i <= kDim; ++i) {
          v[i] = v[0] + kShrink * (v[i] - v[0]);
          f[i] = eval(v[i]);
        }
      }
    }
  }
  order();
  return {v[0], f[0], iter};
}

double mean_nid(const PointCloud& cloud, const std::vector<CalibFrame>& frames,
                const CameraModel& cam, const RigidPose& extrinsic, int bins) {
  double sum = 0;
  for (const auto& frame : frames) {
    const RigidPose lidar_to_cam = extrinsic.compose(frame.lidar_pose.inverse());
    sum += nid(build_histograms(cloud, frame.image, cam, lidar_to_cam, bins));
  }
  return sum / static_cast<double>(frames.size());
}

RigidPose refine_extrinsic(const PointCloud& cloud,
                           const std::vector<CalibFrame>& frames,
                           const CameraModel& cam, const RigidPose& initial,
                           const CalibConfig& cfg) {
  auto apply_perturbation = [&](const Vec6& x) {
    const Vec3 rv = x.head<3>();
    const double angle = rv.norm();
    Quat dq = Quat::Identity();
    if (angle > 0) dq = Quat(Eigen::AngleAxisd(angle, rv / angle));
    return RigidPose(dq, x.tail<3>()).compose(initial);
  };
  auto objective = [&](const Vec6& x) {
    return mean_nid(cloud, frames, cam, apply_perturbation(x), cfg.bins);
  };

  const double f_initial = objective(Vec6::Zero());
  const NelderMeadResult res =
      nelder_mead_minimize(objective, Vec6::Zero(), cfg.optimizer);
  if (res.f_min > f_initial) return initial;
  return apply_perturbation(res.x_min);
}

}  // namespace cracklab
