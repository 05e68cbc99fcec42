#include "cracklab/denoise.hpp"

#include <algorithm>
#include <cmath>

namespace cracklab {

SorResult sor_filter(const PointCloud& cloud, std::size_t k, double n_sigma) {
  if (cloud.size() <= k) {
    throw TooFewPoints("SOR needs more than K=" + std::to_string(k) +
                       " points, got " + std::to_string(cloud.size()));
  }
  KdTree tree(cloud.points);
  const std::size_t n = cloud.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = tree.knn(cloud.points[i], k, i);
    double sum = 0;
    for (std::size_t j : nn) sum += (cloud.points[j] - cloud.points[i]).norm();
    r[i] = sum / static_cast<double>(nn.size());
  }
  double mu = 0;
  for (double v : r) mu += v;
  mu /= static_cast<double>(n);
  double var = 0;
  for (double v : r) var += (v - mu) * (v - mu);
  const double sigma = std::sqrt(var / static_cast<double>(n));
  const double threshold = mu + n_sigma * sigma;

  SorResult result;
  std::vector<std::size_t> kept_idx;
  kept_idx.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (r[i] > threshold) {
      result.removed.push_back(i);
    } else {
      kept_idx.push_back(i);
    }
  }
  result.kept = cloud.select(kept_idx);
  return result;
}

namespace {

int basis_size(int degree) { return (degree + 1) * (degree + 2) / 2; }

}  // namespace

double MlsSurface::height(double u, double v) const {
  double h = 0;
  int idx = 0;
  for (int total = 0; total <= degree; ++total) {
    for (int i = total; i >= 0; --i) {
      const int j = total - i;
      h += coeffs[idx++] * std::pow(u, i) * std::pow(v, j);
    }
  }
  return h;
}

Vec3 MlsSurface::project(const Vec3& p) const {
  const Vec3 d = p - origin;
  const double u = d.dot(e1);
  const double v = d.dot(e2);
  return origin + u * e1 + v * e2 + height(u, v) * normal;
}

MlsSurface fit_mls_polynomial(const Vec3& center, const PointCloud& neighbors,
                              const MlsConfig& cfg) {
  const int nb = basis_size(cfg.polynomial_degree);
  const std::size_t n = neighbors.size();
  if (static_cast<int>(n) < nb) {
    throw InsufficientNeighbors("MLS degree " +
                                std::to_string(cfg.polynomial_degree) +
                                " needs " + std::to_string(nb) +
                                " neighbors, got " + std::to_string(n));
  }
  const double radius = cfg.search_radius;

  std::vector<double> w(n);
  double wsum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = (neighbors.points[i] - center).norm() / radius;
    w[i] = std::exp(-s * s);
    wsum += w[i];
  }

  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) centroid += w[i] * neighbors.points[i];
  centroid /= wsum;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = neighbors.points[i] - centroid;
    cov += w[i] * d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // Eigenvalues ascending: [0] is the normal direction.
  if (eig.eigenvalues()(1) <= 1e-18 * std::max(1.0, eig.eigenvalues()(2))) {
    throw DegenerateNeighborhood("collinear MLS neighborhood");
  }
  MlsSurface surf;
  surf.degree = cfg.polynomial_degree;
  surf.origin = centroid;
  surf.normal = eig.eigenvectors().col(0);
  if (surf.normal.z() < 0) surf.normal = -surf.normal;
  surf.e1 = eig.eigenvectors().col(2);
  surf.e2 = surf.normal.cross(surf.e1);

  Eigen::MatrixXd A(n, nb);
  Eigen::VectorXd f(n), sw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = neighbors.points[i] - centroid;
    const double u = d.dot(surf.e1);
    const double v = d.dot(surf.e2);
    int idx = 0;
    for (int total = 0; total <= surf.degree; ++total) {
      for (int pi = total; pi >= 0; --pi) {
        const int pj = total - pi;
        A(i, idx++) = std::pow(u, pi) * std::pow(v, pj);
      }
    }
    f(i) = d.dot(surf.normal);
    sw(i) = std::sqrt(w[i]);
  }
  Eigen::MatrixXd Aw = sw.asDiagonal() * A;
  Eigen::VectorXd fw = sw.asDiagonal() * f;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Aw);
  qr.setThreshold(1e-10);
  if (qr.rank() < nb) {
    throw DegenerateNeighborhood("rank-deficient MLS normal equations");
  }
  Eigen::VectorXd c = qr.solve(fw);
  surf.coeffs.assign(c.data(), c.data() + nb);
  return surf;
}

MlsResult mls_smooth(const PointCloud& cloud, MlsConfig cfg) {
  MlsResult result;
  result.cloud = cloud;
  if (cloud.empty()) return result;
  if (cfg.search_radius <= 0) {
    cfg.search_radius = 5.0 * median_nn_spacing(cloud);
  }
  if (cfg.search_radius <= 0) {
    result.fallback_count = cloud.size();
    return result;
  }
  KdTree tree(cloud.points);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nb = tree.radius(cloud.points[i], cfg.search_radius);
    PointCloud neighborhood;
    neighborhood.points.reserve(nb.size());
    for (std::size_t j : nb) neighborhood.points.push_back(cloud.points[j]);
    try {
      const MlsSurface surf =
          fit_mls_polynomial(cloud.points[i], neighborhood, cfg);
      result.cloud.points[i] = surf.project(cloud.points[i]);
    } catch (const Error&) {
      ++result.fallback_count;  // pass through unchanged
    }
  }
  return result;
}

PointCloud crop_box(const PointCloud& cloud, const Vec3& min_corner,
                    const Vec3& max_corner) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (p.x() > min_corner.x() && p.x() < max_corner.x() &&
        p.y() > min_corner.y() && p.y() < max_corner.y() &&
        p.z() > min_corner.z() && p.z() < max_corner.z()) {
      keep.push_back(i);
    }
  }
  return cloud.select(keep);
}

double median_nn_spacing(const PointCloud& cloud) {
  if (cloud.size() < 2) return 0.0;
  KdTree tree(cloud.points);
  std::vector<double> d(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], 1, i);
    d[i] = (cloud.points[nn[0]] - cloud.points[i]).norm();
  }
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

}  // namespace cracklab
