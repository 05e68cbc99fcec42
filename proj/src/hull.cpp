#include "cracklab/hull.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace cracklab {

namespace {

struct Face {
  int v[3];
  int nbr[3];  // neighbor across edge (v[i], v[i+1])
  Vec3 n;
  double d = 0;  // plane: n . x = d
  std::vector<int> outside;
  int far_pt = -1;
  double far_dist = 0;
  bool dead = false;

  double dist(const Vec3& p) const { return n.dot(p) - d; }
};

void set_plane(Face& f, const std::vector<Vec3>& pts) {
  const Vec3& a = pts[f.v[0]];
  f.n = (pts[f.v[1]] - a).cross(pts[f.v[2]] - a);
  const double len = f.n.norm();
  if (len > 0) f.n /= len;
  f.d = f.n.dot(a);
}

}  // namespace

std::vector<std::size_t> convex_hull_vertices(const std::vector<Vec3>& points) {
  const int n = static_cast<int>(points.size());
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n < 4) return all;

  double scale = 0;
  for (const auto& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = std::max(scale, 1.0) * 1e-10;

  // extreme points along x, then farthest from the segment, then the plane
  int i0 = 0, i1 = 0;
  for (int i = 1; i < n; ++i) {
    if (points[i].x() < points[i0].x()) i0 = i;
    if (points[i].x() > points[i1].x()) i1 = i;
  }
  if ((points[i1] - points[i0]).norm() < eps) {
    // try the full bounding box diagonal before giving up
    for (int i = 1; i < n; ++i) {
      if ((points[i] - points[i0]).norm() >
          (points[i1] - points[i0]).norm()) {
        i1 = i;
      }
    }
    if ((points[i1] - points[i0]).norm() < eps) return all;
  }
  const Vec3 dir = (points[i1] - points[i0]).normalized();
  int i2 = -1;
  double best = eps;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = points[i] - points[i0];
    const double dist = (d - d.dot(dir) * dir).norm();
    if (dist > best) {
      best = dist;
      i2 = i;
    }
  }
  if (i2 < 0) return all;  // collinear
  Vec3 normal = (points[i1] - points[i0]).cross(points[i2] - points[i0]);
  normal.normalize();
  const double plane_d = normal.dot(points[i0]);
  int i3 = -1;
  best = eps;
  for (int i = 0; i < n; ++i) {
    const double dist = std::abs(normal.dot(points[i]) - plane_d);
    if (dist > best) {
      best = dist;
      i3 = i;
    }
  }
  if (i3 < 0) return all;  // coplanar

  if (normal.dot(points[i3]) - plane_d > 0) std::swap(i1, i2);

  std::vector<Face> faces;
  faces.reserve(64);
  auto add_face = [&](int a, int b, int c) {
    Face f;
    f.v[0] = a;
    f.v[1] = b;
    f.v[2] = c;
    f.nbr[0] = f.nbr[1] = f.nbr[2] = -1;
    set_plane(f, points);
    faces.push_back(std::move(f));
    return static_cast<int>(faces.size()) - 1;
  };
  add_face(i0, i1, i2);
  add_face(i0, i3, i1);
  add_face(i1, i3, i2);
  add_face(i2, i3, i0);

  auto link_all = [&](const std::vector<int>& fids) {
    std::map<std::pair<int, int>, std::pair<int, int>> edges;  // (a,b)->(face,slot)
    for (int fi : fids) {
      for (int e = 0; e < 3; ++e) {
        edges[{faces[fi].v[e], faces[fi].v[(e + 1) % 3]}] = {fi, e};
      }
    }
    for (int fi : fids) {
      for (int e = 0; e < 3; ++e) {
        if (faces[fi].nbr[e] >= 0) continue;
        const auto it =
            edges.find({faces[fi].v[(e + 1) % 3], faces[fi].v[e]});
        if (it != edges.end()) {
          faces[fi].nbr[e] = it->second.first;
          faces[it->second.first].nbr[it->second.second] = fi;
        }
      }
    }
  };
  link_all({0, 1, 2, 3});

  auto assign_outside = [&](Face& f, int idx) {
    const double dist = f.dist(points[idx]);
    if (dist > eps) {
      f.outside.push_back(idx);
      if (dist > f.far_dist) {
        f.far_dist = dist;
        f.far_pt = idx;
      }
      return true;
    }
    return false;
  };
  for (int i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    for (auto& f : faces) {
      if (assign_outside(f, i)) break;
    }
  }

  std::vector<int> pending = {0, 1, 2, 3};
  while (!pending.empty()) {
    const int fi = pending.back();
    pending.pop_back();
    if (faces[fi].dead || faces[fi].outside.empty()) continue;
    const int apex = faces[fi].far_pt;

    // collect visible faces via BFS
    std::vector<int> visible = {fi};
    faces[fi].dead = true;
    std::vector<std::pair<int, int>> horizon;  // (face, edge slot) on visible side
    for (std::size_t s = 0; s < visible.size(); ++s) {
      const int cur = visible[s];
      for (int e = 0; e < 3; ++e) {
        const int nb = faces[cur].nbr[e];
        if (nb < 0) continue;
        if (faces[nb].dead) continue;
        if (faces[nb].dist(points[apex]) > eps) {
          faces[nb].dead = true;
          visible.push_back(nb);
        } else {
          horizon.emplace_back(cur, e);
        }
      }
    }

    std::vector<int> fresh;
    fresh.reserve(horizon.size());
    for (const auto& [hf, he] : horizon) {
      const int a = faces[hf].v[he];
      const int b = faces[hf].v[(he + 1) % 3];
      const int nb = faces[hf].nbr[he];
      const int nf = add_face(a, b, apex);
      faces[nf].nbr[0] = nb;
      for (int e = 0; e < 3; ++e) {
        if (faces[nb].nbr[e] == hf) faces[nb].nbr[e] = nf;
      }
      fresh.push_back(nf);
    }
    link_all(fresh);

    for (int vf : visible) {
      for (int idx : faces[vf].outside) {
        if (idx == apex) continue;
        for (int nf : fresh) {
          if (assign_outside(faces[nf], idx)) break;
        }
      }
      faces[vf].outside.clear();
    }
    for (int nf : fresh) {
      if (!faces[nf].outside.empty()) pending.push_back(nf);
    }
  }

  std::vector<char> on_hull(n, 0);
  for (const auto& f : faces) {
    if (f.dead) continue;
    on_hull[f.v[0]] = on_hull[f.v[1]] = on_hull[f.v[2]] = 1;
  }
  std::vector<std::size_t> out;
  for (int i = 0; i < n; ++i) {
    if (on_hull[i]) out.push_back(i);
  }
  return out;
}

}  // namespace cracklab
