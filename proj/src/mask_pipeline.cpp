#include "cracklab/mask_pipeline.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <queue>
#include <sstream>

#include "cracklab/errors.hpp"

namespace cracklab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform (lower envelope of parabolas).
void dt_1d(const std::vector<double>& f, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s;
    while (true) {
      if (f[v[k]] == kInf) {
        // No finite parabola yet; replace.
        if (k == 0) {
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          break;
        }
        --k;
        continue;
      }
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (s <= z[k]) {
        --k;
      } else {
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
        break;
      }
    }
  }
  if (f[v[0]] == kInf) {
    // Whole row is foreground with no background anywhere.
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    out[q] = (q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

// Neighbor offsets, bit i of the neighborhood code.
constexpr std::array<std::array<int, 2>, 8> kN8 = {{{-1, -1},
                                                    {0, -1},
                                                    {1, -1},
                                                    {-1, 0},
                                                    {1, 0},
                                                    {-1, 1},
                                                    {0, 1},
                                                    {1, 1}}};

// Simple-point lookup for the (8-foreground, 4-background) pair:
// removable iff exactly one 8-component of foreground neighbors and
// exactly one 4-component of background neighbors touching a 4-neighbor.
const std::array<bool, 256>& simple_lut() {
  static const std::array<bool, 256> lut = [] {
    std::array<bool, 256> t{};
    for (int code = 0; code < 256; ++code) {
      bool fg[3][3] = {};
      for (int b = 0; b < 8; ++b) {
        if (code & (1 << b)) fg[kN8[b][1] + 1][kN8[b][0] + 1] = true;
      }
      // count 8-components of FG in the ring
      int fg_comp = 0;
      bool seen[3][3] = {};
      for (int b = 0; b < 8; ++b) {
        const int x = kN8[b][0] + 1, y = kN8[b][1] + 1;
        if (!fg[y][x] || seen[y][x]) continue;
        ++fg_comp;
        std::queue<std::pair<int, int>> q;
        q.emplace(x, y);
        seen[y][x] = true;
        while (!q.empty()) {
          auto [cx, cy] = q.front();
          q.pop();
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = cx + dx, ny = cy + dy;
              if (nx < 0 || nx > 2 || ny < 0 || ny > 2) continue;
              if (nx == 1 && ny == 1) continue;  // ring only
              if (fg[ny][nx] && !seen[ny][nx]) {
                seen[ny][nx] = true;
                q.emplace(nx, ny);
              }
            }
          }
        }
      }
      // count 4-components of BG in the ring that touch a 4-neighbor of p
      int bg_comp = 0;
      bool seenb[3][3] = {};
      for (int b : {1, 3, 4, 6}) {  // 4-neighbors first
        const int x = kN8[b][0] + 1, y = kN8[b][1] + 1;
        if (fg[y][x] || seenb[y][x]) continue;
        ++bg_comp;
        std::queue<std::pair<int, int>> q;
        q.emplace(x, y);
        seenb[y][x] = true;
        while (!q.empty()) {
          auto [cx, cy] = q.front();
          q.pop();
          const std::array<std::array<int, 2>, 4> d4 = {
              {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
          for (const auto& d : d4) {
            const int nx = cx + d[0], ny = cy + d[1];
            if (nx < 0 || nx > 2 || ny < 0 || ny > 2) continue;
            if (nx == 1 && ny == 1) continue;
            if (!fg[ny][nx] && !seenb[ny][nx]) {
              seenb[ny][nx] = true;
              q.emplace(nx, ny);
            }
          }
        }
      }
      t[code] = fg_comp == 1 && bg_comp == 1;
    }
    return t;
  }();
  return lut;
}

int neighborhood_code(const BinaryMask& m, int x, int y) {
  int code = 0;
  for (int b = 0; b < 8; ++b) {
    const int nx = x + kN8[b][0], ny = y + kN8[b][1];
    if (m.in_bounds(nx, ny) && m.at(nx, ny)) code |= 1 << b;
  }
  return code;
}

int fg_neighbor_count(const BinaryMask& m, int x, int y) {
  int n = 0;
  for (int b = 0; b < 8; ++b) {
    const int nx = x + kN8[b][0], ny = y + kN8[b][1];
    if (m.in_bounds(nx, ny) && m.at(nx, ny)) ++n;
  }
  return n;
}

RasterImage crop_image(const RasterImage& img, const CropRect& r) {
  RasterImage out = img.channels == 3 ? RasterImage::rgb(r.w, r.h)
                                      : RasterImage::gray(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(x, y, c) = img.at(r.x0 + x, r.y0 + y, c);
      }
    }
  }
  return out;
}

BinaryMask crop_mask(const BinaryMask& m, const CropRect& r) {
  BinaryMask out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x) {
      out.at(x, y) = m.at(r.x0 + x, r.y0 + y);
    }
  }
  return out;
}

}  // namespace

std::vector<double> euclidean_distance_transform(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<double> d2(static_cast<std::size_t>(w) * h);
  // columns
  std::vector<double> col(h), colo(h);
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col[y] = mask.at(x, y) ? kInf : 0.0;
    dt_1d(col, colo);
    for (int y = 0; y < h; ++y) tmp[static_cast<std::size_t>(y) * w + x] = colo[y];
  }
  // rows
  std::vector<double> row(w), rowo(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) row[x] = tmp[static_cast<std::size_t>(y) * w + x];
    dt_1d(row, rowo);
    for (int x = 0; x < w; ++x) {
      const double v = rowo[x];
      d2[static_cast<std::size_t>(y) * w + x] = v == kInf ? kInf : std::sqrt(v);
    }
  }
  return d2;
}

BinaryMask extract_skeleton(const BinaryMask& mask) {
  BinaryMask skel = mask;
  const auto edt = euclidean_distance_transform(mask);
  const auto& lut = simple_lut();

  using Entry = std::tuple<double, int, int>;  // (edt, y, x), min-heap
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) {
        queue.emplace(edt[static_cast<std::size_t>(y) * mask.width + x], y, x);
      }
    }
  }
  while (!queue.empty()) {
    auto [d, y, x] = queue.top();
    queue.pop();
    if (!skel.at(x, y)) continue;
    if (fg_neighbor_count(skel, x, y) <= 1) continue;  // curve endpoint
    if (!lut[neighborhood_code(skel, x, y)]) continue;
    skel.at(x, y) = 0;
    for (const auto& n : kN8) {
      const int nx = x + n[0], ny = y + n[1];
      if (skel.in_bounds(nx, ny) && skel.at(nx, ny)) {
        queue.emplace(edt[static_cast<std::size_t>(ny) * mask.width + nx], ny, nx);
      }
    }
  }
  return skel;
}

std::vector<Pixel> sample_prompts(const BinaryMask& skeleton,
                                  const std::vector<double>& edt, int k,
                                  double min_dist) {
  struct Cand {
    double d;
    int x, y;
  };
  std::vector<Cand> cands;
  for (int y = 0; y < skeleton.height; ++y) {
    for (int x = 0; x < skeleton.width; ++x) {
      if (skeleton.at(x, y)) {
        cands.push_back(
            {edt[static_cast<std::size_t>(y) * skeleton.width + x], x, y});
      }
    }
  }
  if (cands.empty()) throw EmptySkeleton("no skeleton pixels to sample");
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.d != b.d) return a.d > b.d;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  std::vector<Pixel> kept;
  for (const auto& c : cands) {
    if (static_cast<int>(kept.size()) >= k) break;
    bool far_enough = true;
    for (const auto& p : kept) {
      const double dx = p.u - c.x, dy = p.v - c.y;
      if (dx * dx + dy * dy < min_dist * min_dist) {
        far_enough = false;
        break;
      }
    }
    if (far_enough) kept.push_back({static_cast<double>(c.x), static_cast<double>(c.y)});
  }
  return kept;
}

std::vector<int> cluster_prompts(const std::vector<Pixel>& points, double eps,
                                 int min_pts) {
  const std::size_t n = points.size();
  std::vector<int> label(n, -2);  // -2 unvisited, -1 noise
  const double eps2 = eps * eps;
  auto neighbors_of = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = points[i].u - points[j].u;
      const double dy = points[i].v - points[j].v;
      if (dx * dx + dy * dy <= eps2) out.push_back(j);
    }
    return out;
  };
  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != -2) continue;
    auto nb = neighbors_of(i);
    if (static_cast<int>(nb.size()) + 1 < min_pts) {
      label[i] = -1;
      continue;
    }
    const int cid = next_cluster++;
    label[i] = cid;
    std::vector<std::size_t> seeds(nb.begin(), nb.end());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const std::size_t j = seeds[s];
      if (label[j] == -1) label[j] = cid;  // border point
      if (label[j] != -2) continue;
      label[j] = cid;
      auto nb2 = neighbors_of(j);
      if (static_cast<int>(nb2.size()) + 1 >= min_pts) {
        seeds.insert(seeds.end(), nb2.begin(), nb2.end());
      }
    }
  }
  return label;
}

std::vector<CropRect> make_crop_batches(const std::vector<Pixel>& points,
                                        const std::vector<int>& cluster_id,
                                        int dilation, int image_w,
                                        int image_h) {
  int max_id = -1;
  for (int c : cluster_id) max_id = std::max(max_id, c);
  if (max_id < 0) throw NoClusters("all prompt points are noise");
  std::vector<CropRect> rects;
  for (int cid = 0; cid <= max_id; ++cid) {
    double lo_u = kInf, hi_u = -kInf, lo_v = kInf, hi_v = -kInf;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (cluster_id[i] != cid) continue;
      lo_u = std::min(lo_u, points[i].u);
      hi_u = std::max(hi_u, points[i].u);
      lo_v = std::min(lo_v, points[i].v);
      hi_v = std::max(hi_v, points[i].v);
    }
    if (lo_u > hi_u) continue;  // empty id (all members reassigned)
    int x0 = static_cast<int>(std::floor(lo_u)) - dilation;
    int y0 = static_cast<int>(std::floor(lo_v)) - dilation;
    int x1 = static_cast<int>(std::ceil(hi_u)) + dilation + 1;
    int y1 = static_cast<int>(std::ceil(hi_v)) + dilation + 1;
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, image_w);
    y1 = std::min(y1, image_h);
    rects.push_back({x0, y0, x1 - x0, y1 - y0});
  }
  if (rects.empty()) throw NoClusters("all prompt points are noise");
  return rects;
}

std::size_t count_holes(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(w) * h, 0);
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  std::size_t holes = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) || visited[idx(x, y)]) continue;
      // flood-fill this background component (4-connected)
      bool touches_border = false;
      std::queue<std::pair<int, int>> q;
      q.emplace(x, y);
      visited[idx(x, y)] = 1;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        if (cx == 0 || cy == 0 || cx == w - 1 || cy == h - 1) {
          touches_border = true;
        }
        const std::array<std::array<int, 2>, 4> d4 = {
            {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (const auto& d : d4) {
          const int nx = cx + d[0], ny = cy + d[1];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          if (mask.at(nx, ny) || visited[idx(nx, ny)]) continue;
          visited[idx(nx, ny)] = 1;
          q.emplace(nx, ny);
        }
      }
      if (!touches_border) ++holes;
    }
  }
  return holes;
}

QualityVerdict assess_quality(const BinaryMask& base,
                              const BinaryMask& refined,
                              double max_size_ratio, std::size_t max_holes) {
  if (base.width != refined.width || base.height != refined.height) {
    throw DimensionMismatch("base and refined mask dimensions differ");
  }
  QualityVerdict v;
  v.hole_count = count_holes(refined);
  const double base_area = static_cast<double>(std::max<std::size_t>(base.area(), 1));
  v.size_ratio = static_cast<double>(refined.area()) / base_area;
  v.accepted = v.size_ratio <= max_size_ratio && v.hole_count <= max_holes;
  return v;
}

BinaryMask DilateRefiner::refine(const RasterImage&, const BinaryMask& base_crop,
                                 const std::vector<Pixel>&) {
  BinaryMask out(base_crop.width, base_crop.height);
  for (int y = 0; y < base_crop.height; ++y) {
    for (int x = 0; x < base_crop.width; ++x) {
      bool any = false;
      for (int dy = -radius_; dy <= radius_ && !any; ++dy) {
        for (int dx = -radius_; dx <= radius_ && !any; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (base_crop.in_bounds(nx, ny) && base_crop.at(nx, ny)) any = true;
        }
      }
      out.at(x, y) = any ? 1 : 0;
    }
  }
  return out;
}

BinaryMask HolePunchRefiner::refine(const RasterImage& image_crop,
                                    const BinaryMask&,
                                    const std::vector<Pixel>&) {
  // Solid foreground with `holes_` isolated interior background pixels.
  BinaryMask out(image_crop.width, image_crop.height, 1);
  int punched = 0;
  for (int y = 2; y < out.height - 2 && punched < holes_; y += 4) {
    for (int x = 2; x < out.width - 2 && punched < holes_; x += 4) {
      out.at(x, y) = 0;
      ++punched;
    }
  }
  return out;
}

BinaryMask ExternalRefiner::refine(const RasterImage& image_crop,
                                   const BinaryMask&,
                                   const std::vector<Pixel>& prompts) {
  int to_child[2], from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw RefinerError("pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw RefinerError("fork() failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), nullptr);
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);

  // request: P5 crop (RGB crops are sent as luminance), count, u v pairs
  std::ostringstream req;
  req << "P5\n" << image_crop.width << " " << image_crop.height << "\n255\n";
  for (int y = 0; y < image_crop.height; ++y) {
    for (int x = 0; x < image_crop.width; ++x) {
      int v = image_crop.channels == 3
                  ? (image_crop.at(x, y, 0) + image_crop.at(x, y, 1) +
                     image_crop.at(x, y, 2)) /
                        3
                  : image_crop.at(x, y);
      req.put(static_cast<char>(v));
    }
  }
  req << "\n" << prompts.size() << "\n";
  for (const auto& p : prompts) req << p.u << " " << p.v << "\n";
  const std::string payload = req.str();
  std::size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n = write(to_child[1], payload.data() + written,
                            payload.size() - written);
    if (n <= 0) break;
    written += static_cast<std::size_t>(n);
  }
  close(to_child[1]);

  std::string response;
  char buf[4096];
  ssize_t n;
  while ((n = read(from_child[0], buf, sizeof buf)) > 0) {
    response.append(buf, static_cast<std::size_t>(n));
  }
  close(from_child[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw RefinerError("external refiner exited with status " +
                       std::to_string(status));
  }

  std::istringstream resp(response);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  resp >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255) {
    throw RefinerError("external refiner returned a malformed P5 response");
  }
  resp.get();  // single whitespace after maxval
  if (w != image_crop.width || h != image_crop.height) {
    throw RefinerError("external refiner mask dimensions mismatch");
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < out.bits.size(); ++i) {
    const int c = resp.get();
    if (c == EOF) throw RefinerError("external refiner response truncated");
    out.bits[i] = c >= 128 ? 1 : 0;
  }
  return out;
}

std::unique_ptr<MaskRefiner> make_refiner(const std::string& name) {
  if (name == "identity") return std::make_unique<IdentityRefiner>();
  if (name == "dilate") return std::make_unique<DilateRefiner>();
  if (name == "flood") return std::make_unique<FloodRefiner>();
  if (name == "holes") return std::make_unique<HolePunchRefiner>();
  if (name.rfind("external:", 0) == 0) {
    return std::make_unique<ExternalRefiner>(name.substr(9));
  }
  throw Error("unknown refiner '" + name + "'");
}

RefineReport refine_mask(const RasterImage& image, const BinaryMask& base,
                         MaskRefiner& refiner, const RefineParams& params) {
  if (image.width != base.width || image.height != base.height) {
    throw DimensionMismatch("image and base mask dimensions differ");
  }
  RefineReport report;
  report.mask = base;

  const auto edt = euclidean_distance_transform(base);
  const BinaryMask skeleton = extract_skeleton(base);
  report.prompts.points =
      sample_prompts(skeleton, edt, params.top_k, params.min_dist);
  report.prompts.cluster_id = cluster_prompts(
      report.prompts.points, params.cluster_eps, params.cluster_min_pts);
  report.prompts.crop_rects =
      make_crop_batches(report.prompts.points, report.prompts.cluster_id,
                        params.crop_dilation, image.width, image.height);

  int max_id = -1;
  for (int c : report.prompts.cluster_id) max_id = std::max(max_id, c);
  std::size_t rect_idx = 0;
  for (int cid = 0; cid <= max_id; ++cid) {
    bool has_member = false;
    for (int c : report.prompts.cluster_id) {
      if (c == cid) { has_member = true; break; }
    }
    if (!has_member) continue;
    const CropRect rect = report.prompts.crop_rects[rect_idx++];

    std::vector<Pixel> local_prompts;
    for (std::size_t i = 0; i < report.prompts.points.size(); ++i) {
      if (report.prompts.cluster_id[i] != cid) continue;
      local_prompts.push_back({report.prompts.points[i].u - rect.x0,
                               report.prompts.points[i].v - rect.y0});
    }
    const RasterImage img_crop = crop_image(image, rect);
    const BinaryMask base_crop = crop_mask(base, rect);

    BinaryMask refined;
    try {
      refined = refiner.refine(img_crop, base_crop, local_prompts);
    } catch (const Error&) {
      ++report.refiner_failures;
      continue;
    }
    QualityVerdict verdict = assess_quality(base_crop, refined,
                                            params.max_size_ratio,
                                            params.max_holes);
    report.verdicts.push_back(verdict);
    if (verdict.accepted) {
      ++report.crops_accepted;
      for (int y = 0; y < rect.h; ++y) {
        for (int x = 0; x < rect.w; ++x) {
          if (refined.at(x, y)) report.mask.at(rect.x0 + x, rect.y0 + y) = 1;
        }
      }
    } else {
      ++report.crops_rejected;
    }
  }
  return report;
}

}  // namespace cracklab
