#pragma once

#include <string>
#include <vector>

#include "cracklab/calib.hpp"
#include "cracklab/denoise.hpp"
#include "cracklab/fusion.hpp"
#include "cracklab/metrology.hpp"

namespace cracklab {

/// Everything a batch run needs, parsed from one JSON config file.
struct PipelineConfig {
  std::string cloud_path;
  std::string trajectory_path;
  std::string extrinsic_path;  // optional; identity when empty
  std::string seeds_path;      // optional; skips the measure stage when empty
  std::string output_dir = "out";

  std::vector<std::string> image_paths;
  std::vector<double> image_times;
  std::vector<std::string> mask_paths;     // parallel to images; may be empty
  std::vector<std::string> gt_mask_paths;  // optional, enables mIoU

  CameraModel camera;

  bool run_calibration = false;
  CalibConfig calib;

  std::size_t sor_k = 60;
  double sor_n_sigma = 1.0;
  MlsConfig mls;
  FusionConfig fusion;
  MetrologyParams metrology;
  double eval_radius = 0.01;
};

/// Parses and validates the config; referenced paths must exist.
PipelineConfig load_pipeline_config(const std::string& path);

/// A pipeline stage failure, tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& msg)
      : Error("[" + stage + "] " + msg), stage(stage) {}
  std::string stage;
};

struct PipelineResult {
  std::string fused_cloud_path;
  std::string measurement_report_path;
  std::string metrics_report_path;
  std::string manifest_path;
  RigidPose extrinsic;
  std::size_t sor_removed = 0;
  std::size_t measured = 0;
};

/// calibrate (optional) -> denoise -> fuse -> measure -> eval.
/// Throws StageError on the first failing stage.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace cracklab
