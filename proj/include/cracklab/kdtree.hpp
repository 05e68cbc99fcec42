#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <vector>

#include "cracklab/geometry.hpp"

namespace cracklab {

/// Static 3-d tree over a point array. Queries match brute force exactly;
/// KNN ties are broken by index so results are deterministic.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const std::vector<Vec3>& points) : pts_(points) {
    index_.resize(pts_.size());
    std::iota(index_.begin(), index_.end(), std::size_t{0});
    nodes_.reserve(pts_.size());
    if (!pts_.empty()) root_ = build(0, pts_.size());
  }

  std::size_t size() const { return pts_.size(); }

  /// Indices of the k nearest points to `q`, nearest first. When
  /// `exclude` is a valid index that point is skipped (self queries).
  std::vector<std::size_t> knn(const Vec3& q, std::size_t k,
                               std::size_t exclude = kNone) const {
    // (dist2, index) max-heap keeps the current best k.
    std::priority_queue<std::pair<double, std::size_t>> heap;
    knn_rec(root_, q, k, exclude, heap);
    std::vector<std::size_t> out(heap.size());
    std::vector<double> d2(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
      out[i] = heap.top().second;
      d2[i] = heap.top().first;
      heap.pop();
    }
    // Stable order for equal distances.
    std::vector<std::size_t> order(out.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (d2[a] != d2[b]) return d2[a] < d2[b];
      return out[a] < out[b];
    });
    std::vector<std::size_t> sorted(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) sorted[i] = out[order[i]];
    return sorted;
  }

  /// Indices within `radius` of q (inclusive), ascending by index.
  std::vector<std::size_t> radius(const Vec3& q, double r,
                                  std::size_t exclude = kNone) const {
    std::vector<std::size_t> out;
    radius_rec(root_, q, r * r, exclude, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // leaf range into index_
    int axis = -1;
    double split = 0;
    int left = -1, right = -1;
  };
  static constexpr std::size_t kLeafSize = 16;

  int build(std::size_t begin, std::size_t end) {
    Node n;
    n.begin = begin;
    n.end = end;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = pts_[index_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(pts_[index_[i]]);
      hi = hi.cwiseMax(pts_[index_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = (begin + end) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid,
                     index_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       return pts_[a][axis] < pts_[b][axis];
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = pts_[index_[mid]][axis];
    nodes_[id].left = build(begin, mid);
    nodes_[id].right = build(mid, end);
    return id;
  }

  void knn_rec(int id, const Vec3& q, std::size_t k, std::size_t exclude,
               std::priority_queue<std::pair<double, std::size_t>>& heap) const {
    if (id < 0) return;
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = index_[i];
        if (idx == exclude) continue;
        const double d2 = (pts_[idx] - q).squaredNorm();
        if (heap.size() < k) {
          heap.emplace(d2, idx);
        } else if (d2 < heap.top().first ||
                   (d2 == heap.top().first && idx < heap.top().second)) {
          heap.pop();
          heap.emplace(d2, idx);
        }
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0 ? n.left : n.right;
    const int far = delta < 0 ? n.right : n.left;
    knn_rec(near, q, k, exclude, heap);
    if (heap.size() < k || delta * delta <= heap.top().first) {
      knn_rec(far, q, k, exclude, heap);
    }
  }

  void radius_rec(int id, const Vec3& q, double r2, std::size_t exclude,
                  std::vector<std::size_t>& out) const {
    if (id < 0) return;
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = index_[i];
        if (idx == exclude) continue;
        if ((pts_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0 ? n.left : n.right;
    const int far = delta < 0 ? n.right : n.left;
    radius_rec(near, q, r2, exclude, out);
    if (delta * delta <= r2) radius_rec(far, q, r2, exclude, out);
  }

  std::vector<Vec3> pts_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace cracklab
