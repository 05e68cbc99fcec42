#include "cracklab/metrics.hpp"

#include <cmath>

#include "cracklab/errors.hpp"
#include "cracklab/kdtree.hpp"

namespace cracklab {

double miou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw DimensionMismatch("mask dimensions differ");
  }
  std::uint64_t counts[2][2] = {};  // [gt][pred]
  for (std::size_t i = 0; i < gt.bits.size(); ++i) {
    ++counts[gt.bits[i]][pred.bits[i]];
  }
  double sum = 0;
  for (int cls = 0; cls < 2; ++cls) {
    const std::uint64_t inter = counts[cls][cls];
    const std::uint64_t uni =
        counts[cls][0] + counts[cls][1] + counts[1 - cls][cls];
    sum += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
  }
  return sum / 2.0;
}

MeanStd point_surface_density(const PointCloud& cloud, double radius) {
  MeanStd out;
  if (cloud.empty()) return out;
  KdTree tree(cloud.points);
  std::vector<double> counts(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    counts[i] =
        static_cast<double>(tree.radius(cloud.points[i], radius, i).size());
  }
  double mean = 0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  double var = 0;
  for (double c : counts) var += (c - mean) * (c - mean);
  out.mean = mean;
  out.stddev = std::sqrt(var / static_cast<double>(counts.size()));
  out.scored = counts.size();
  return out;
}

MeanStd surface_roughness(const PointCloud& cloud, double radius) {
  MeanStd out;
  if (cloud.empty()) return out;
  KdTree tree(cloud.points);
  std::vector<double> dist;
  dist.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nb = tree.radius(cloud.points[i], radius, i);
    if (nb.size() < 3) {
      ++out.skipped;
      continue;
    }
    Vec3 centroid = Vec3::Zero();
    for (std::size_t j : nb) centroid += cloud.points[j];
    centroid /= static_cast<double>(nb.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t j : nb) {
      const Vec3 d = cloud.points[j] - centroid;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Vec3 n = eig.eigenvectors().col(0);
    dist.push_back(std::abs(n.dot(cloud.points[i] - centroid)));
  }
  if (dist.empty()) return out;
  double mean = 0;
  for (double d : dist) mean += d;
  mean /= static_cast<double>(dist.size());
  double var = 0;
  for (double d : dist) var += (d - mean) * (d - mean);
  out.mean = mean;
  out.stddev = std::sqrt(var / static_cast<double>(dist.size()));
  out.scored = dist.size();
  return out;
}

}  // namespace cracklab
