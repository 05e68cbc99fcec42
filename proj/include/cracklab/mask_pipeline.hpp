#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cracklab/image.hpp"
#include "cracklab/geometry.hpp"

namespace cracklab {

/// Image-aligned crop rectangle, clamped to image bounds by producers.
struct CropRect {
  int x0 = 0, y0 = 0, w = 0, h = 0;

  bool contains(double u, double v) const {
    return u >= x0 && u < x0 + w && v >= y0 && v < y0 + h;
  }
};

/// Prompt points with their cluster assignment and per-cluster crops.
struct PromptSet {
  std::vector<Pixel> points;
  std::vector<int> cluster_id;  // parallel to points; -1 = noise
  std::vector<CropRect> crop_rects;
};

struct QualityVerdict {
  std::size_t hole_count = 0;
  double size_ratio = 0.0;  // refined area / base area
  bool accepted = false;
};

/// Exact Euclidean distance of every foreground pixel to the nearest
/// background pixel; background pixels get 0.
std::vector<double> euclidean_distance_transform(const BinaryMask& mask);

/// One-pixel-wide medial curve: homotopic thinning that removes simple,
/// non-endpoint pixels in increasing EDT order. Preserves the number of
/// 8-connected components.
BinaryMask extract_skeleton(const BinaryMask& mask);

/// Skeleton pixels ranked by EDT descending, greedily thinned so kept
/// points stay at least min_dist apart, truncated at k.
std::vector<Pixel> sample_prompts(const BinaryMask& skeleton,
                                  const std::vector<double>& edt, int k,
                                  double min_dist);

/// Density-based clustering over pixel coordinates. Returns one id per
/// point; -1 marks noise (fewer than min_pts neighbors within eps and no
/// core neighbor).
std::vector<int> cluster_prompts(const std::vector<Pixel>& points, double eps,
                                 int min_pts);

/// Per-cluster bounding boxes of member points, dilated and clamped.
std::vector<CropRect> make_crop_batches(const std::vector<Pixel>& points,
                                        const std::vector<int>& cluster_id,
                                        int dilation, int image_w,
                                        int image_h);

/// Number of background regions fully enclosed by foreground
/// (4-connected background components that do not touch the border).
std::size_t count_holes(const BinaryMask& mask);

/// Region-size and topology gate over a refined mask.
QualityVerdict assess_quality(const BinaryMask& base,
                              const BinaryMask& refined,
                              double max_size_ratio, std::size_t max_holes);

/// Promptable mask refiner boundary. The base-mask crop is provided so
/// test doubles can act on it; external refiners ignore it.
class MaskRefiner {
 public:
  virtual ~MaskRefiner() = default;
  /// prompts are crop-local pixel coordinates; the result must match the
  /// crop dimensions.
  virtual BinaryMask refine(const RasterImage& image_crop,
                            const BinaryMask& base_crop,
                            const std::vector<Pixel>& prompts) = 0;
};

/// Returns the base crop unchanged.
class IdentityRefiner : public MaskRefiner {
 public:
  BinaryMask refine(const RasterImage&, const BinaryMask& base_crop,
                    const std::vector<Pixel>&) override {
    return base_crop;
  }
};

/// Returns the base crop dilated by a square structuring element.
class DilateRefiner : public MaskRefiner {
 public:
  explicit DilateRefiner(int radius_px = 1) : radius_(radius_px) {}
  BinaryMask refine(const RasterImage&, const BinaryMask& base_crop,
                    const std::vector<Pixel>&) override;

 private:
  int radius_;
};

/// Adversarial double: floods the whole crop with foreground.
class FloodRefiner : public MaskRefiner {
 public:
  BinaryMask refine(const RasterImage& image_crop, const BinaryMask&,
                    const std::vector<Pixel>&) override {
    return BinaryMask(image_crop.width, image_crop.height, 1);
  }
};

/// Adversarial double: base crop with a fixed number of punched holes.
class HolePunchRefiner : public MaskRefiner {
 public:
  explicit HolePunchRefiner(int holes = 3) : holes_(holes) {}
  BinaryMask refine(const RasterImage& image_crop, const BinaryMask&,
                    const std::vector<Pixel>&) override;

 private:
  int holes_;
};

/// Pipes each crop to a child process:
///   request:  P5 crop bytes, then "N\n" and N lines "u v\n"
///   response: P5 mask bytes of the same dimensions
class ExternalRefiner : public MaskRefiner {
 public:
  explicit ExternalRefiner(std::string command) : command_(std::move(command)) {}
  BinaryMask refine(const RasterImage& image_crop, const BinaryMask&,
                    const std::vector<Pixel>& prompts) override;

 private:
  std::string command_;
};

/// Builds a refiner by CLI name: "identity", "dilate", "flood",
/// "holes", or "external:<command>".
std::unique_ptr<MaskRefiner> make_refiner(const std::string& name);

struct RefineParams {
  int top_k = 20;
  double min_dist = 15.0;
  double cluster_eps = 25.0;
  int cluster_min_pts = 3;
  int crop_dilation = 32;
  double max_size_ratio = 3.0;
  std::size_t max_holes = 2;
};

struct RefineReport {
  BinaryMask mask;
  PromptSet prompts;
  std::vector<QualityVerdict> verdicts;  // one per crop
  std::size_t crops_accepted = 0;
  std::size_t crops_rejected = 0;
  std::size_t refiner_failures = 0;
};

/// Full refinement pass: EDT -> skeleton -> prompts -> clusters -> crops,
/// refiner per crop, quality gate, OR-merge of accepted crops onto base.
RefineReport refine_mask(const RasterImage& image, const BinaryMask& base,
                         MaskRefiner& refiner, const RefineParams& params);

}  // namespace cracklab
