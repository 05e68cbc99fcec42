#pragma once

#include <string>
#include <vector>

#include "cracklab/image.hpp"
#include "cracklab/measurement.hpp"
#include "cracklab/point_cloud.hpp"

namespace cracklab {

/// Loads an ASCII/binary-little-endian PLY or ASCII PCD cloud. Points with
/// non-finite coordinates are dropped; the count lands in *dropped when
/// non-null. Attribute rows of dropped points are removed with them.
PointCloud load_point_cloud(const std::string& path,
                            std::size_t* dropped = nullptr);

/// Writes a PLY file carrying whichever attributes the cloud has.
void save_point_cloud(const PointCloud& cloud, const std::string& path,
                      bool binary = true);

/// One pose per line: timestamp tx ty tz qw qx qy qz.
/// Quaternions are renormalized on load; out-of-order timestamps are an
/// error. *warnings collects normalization notices when non-null.
Trajectory load_trajectory(const std::string& path,
                           std::vector<std::string>* warnings = nullptr);

void save_trajectory(const Trajectory& traj, const std::string& path);

/// P5 (grayscale), P6 (RGB), or PNG.
RasterImage load_image(const std::string& path);

/// Writes P5 for single-channel and P6 for RGB images.
void save_image(const RasterImage& img, const std::string& path);

/// Loads an image and binarizes it at threshold 128 (RGB inputs are
/// averaged first). When expect_w/expect_h are nonzero, a size mismatch
/// against the paired image raises DimensionMismatch.
BinaryMask load_mask(const std::string& path, int expect_w = 0,
                     int expect_h = 0);

void save_mask(const BinaryMask& mask, const std::string& path);

/// CSV report in the measurement-table layout; widths in millimeters.
void write_measurement_report(const std::vector<CrackMeasurement>& ms,
                              const std::string& path);

}  // namespace cracklab
