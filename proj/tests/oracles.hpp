// Brute-force reference implementations used to cross-check the library.
// Everything here is deliberately naive and independent of the code under
// test.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "cracklab/geometry.hpp"
#include "cracklab/image.hpp"

namespace oracle {

using cracklab::BinaryMask;
using cracklab::Pixel;
using cracklab::Vec3;

// exact EDT by scanning every background pixel
inline std::vector<double> brute_edt(const BinaryMask& mask) {
  std::vector<double> out(mask.bits.size(), 0.0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int by = 0; by < mask.height; ++by) {
        for (int bx = 0; bx < mask.width; ++bx) {
          if (mask.at(bx, by)) continue;
          const double d = std::hypot(bx - x, by - y);
          best = std::min(best, d);
        }
      }
      out[static_cast<std::size_t>(y) * mask.width + x] = best;
    }
  }
  return out;
}

// number of foreground components under 8-connectivity
inline std::size_t count_components_fg8(const BinaryMask& mask) {
  std::vector<char> seen(mask.bits.size(), 0);
  std::size_t comps = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
      if (!mask.at(x, y) || seen[idx]) continue;
      ++comps;
      std::queue<std::pair<int, int>> q;
      q.emplace(x, y);
      seen[idx] = 1;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) continue;
            const std::size_t nidx =
                static_cast<std::size_t>(ny) * mask.width + nx;
            if (!seen[nidx]) {
              seen[nidx] = 1;
              q.emplace(nx, ny);
            }
          }
        }
      }
    }
  }
  return comps;
}

// hole count via the Euler characteristic: E8 = (Q1 - Q3 - 2*QD)/4 counted
// over all 2x2 quads of the padded image; holes = components - E8
inline std::size_t euler_holes(const BinaryMask& mask) {
  auto at = [&](int x, int y) -> int {
    return mask.in_bounds(x, y) ? mask.at(x, y) : 0;
  };
  long q1 = 0, q3 = 0, qd = 0;
  for (int y = -1; y < mask.height; ++y) {
    for (int x = -1; x < mask.width; ++x) {
      const int a = at(x, y), b = at(x + 1, y);
      const int c = at(x, y + 1), d = at(x + 1, y + 1);
      const int sum = a + b + c + d;
      if (sum == 1) ++q1;
      if (sum == 3) ++q3;
      if (sum == 2 && ((a && d) || (b && c))) ++qd;
    }
  }
  const long euler4 = (q1 - q3 - 2 * qd);  // 4 * E8
  const long e8 = euler4 / 4;
  const long comps = static_cast<long>(count_components_fg8(mask));
  return static_cast<std::size_t>(comps - e8);
}

// greedy top-k farthest-from-background prompt selection, re-derived
inline std::vector<Pixel> greedy_prompts(const BinaryMask& skeleton,
                                         const std::vector<double>& edt, int k,
                                         double min_dist) {
  struct C {
    double d;
    int x, y;
  };
  std::vector<C> cands;
  for (int y = 0; y < skeleton.height; ++y) {
    for (int x = 0; x < skeleton.width; ++x) {
      if (skeleton.at(x, y)) {
        cands.push_back(
            {edt[static_cast<std::size_t>(y) * skeleton.width + x], x, y});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const C& a, const C& b) {
    if (a.d != b.d) return a.d > b.d;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  std::vector<Pixel> out;
  for (const auto& c : cands) {
    if (static_cast<int>(out.size()) >= k) break;
    bool ok = true;
    for (const auto& p : out) {
      if (std::hypot(p.u - c.x, p.v - c.y) < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back({static_cast<double>(c.x), static_cast<double>(c.y)});
  }
  return out;
}

// textbook DBSCAN: BFS from each unvisited core point in index order
inline std::vector<int> dbscan(const std::vector<Pixel>& pts, double eps,
                               int min_pts) {
  const int n = static_cast<int>(pts.size());
  auto neighbors = [&](int i) {
    std::vector<int> out;
    for (int j = 0; j < n; ++j) {
      if (j != i && std::hypot(pts[i].u - pts[j].u, pts[i].v - pts[j].v) <=
                        eps) {
        out.push_back(j);
      }
    }
    return out;
  };
  std::vector<char> core(n, 0);
  for (int i = 0; i < n; ++i) {
    core[i] = static_cast<int>(neighbors(i).size()) + 1 >= min_pts;
  }
  std::vector<int> label(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || label[i] >= 0) continue;
    const int id = next++;
    std::queue<int> q;
    q.push(i);
    label[i] = id;
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      if (!core[c]) continue;
      for (int j : neighbors(c)) {
        if (label[j] < 0) {
          label[j] = id;
          q.push(j);
        }
      }
    }
  }
  return label;
}

// equivalence of two clusterings up to label renaming: identical noise sets
// and identical co-membership for every pair
inline bool same_partition(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool ta = a[i] >= 0 && a[i] == a[j];
      const bool tb = b[i] >= 0 && b[i] == b[j];
      if (ta != tb) return false;
    }
  }
  return true;
}

inline std::vector<std::size_t> brute_knn(const std::vector<Vec3>& pts,
                                          const Vec3& q, std::size_t k) {
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = (pts[a] - q).squaredNorm();
    const double db = (pts[b] - q).squaredNorm();
    if (da != db) return da < db;
    return a < b;
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

// per-pixel confusion enumeration for two-class mIoU
inline double miou_pixels(const BinaryMask& pred, const BinaryMask& gt) {
  double total = 0;
  for (int cls = 0; cls < 2; ++cls) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.bits.size(); ++i) {
      const bool p = pred.bits[i] == cls;
      const bool g = gt.bits[i] == cls;
      inter += p && g;
      uni += p || g;
    }
    total += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
  }
  return total / 2.0;
}

// random small blob mask
inline BinaryMask random_mask(std::mt19937& rng, int max_side = 18,
                              double fill = 0.45) {
  std::uniform_int_distribution<int> side(4, max_side);
  const int w = side(rng), h = side(rng);
  BinaryMask m(w, h);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& b : m.bits) b = u(rng) < fill ? 1 : 0;
  return m;
}

}  // namespace oracle
