#include "cracklab/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cracklab/io.hpp"
#include "cracklab/mask_pipeline.hpp"
#include "cracklab/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cracklab {

namespace {

void require_exists(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw IoError(what + " not found: " + path);
  }
}

double json_num(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

struct SeedEntry {
  int crack_id;
  Pixel seed;
  std::size_t frame;
};

std::vector<SeedEntry> load_seeds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open seed list: " + path);
  std::vector<SeedEntry> seeds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    SeedEntry e;
    if (!(ss >> e.crack_id >> e.seed.u >> e.seed.v >> e.frame)) {
      throw ParseError("bad seed line in " + path, lineno);
    }
    seeds.push_back(e);
  }
  return seeds;
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("config JSON: ") + e.what());
  }

  PipelineConfig cfg;
  cfg.cloud_path = j.at("cloud").get<std::string>();
  cfg.trajectory_path = j.at("trajectory").get<std::string>();
  if (j.contains("extrinsic")) cfg.extrinsic_path = j["extrinsic"];
  if (j.contains("seeds")) cfg.seeds_path = j["seeds"];
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"];

  for (const auto& img : j.at("images")) {
    cfg.image_paths.push_back(img.at("path").get<std::string>());
    cfg.image_times.push_back(img.at("time").get<double>());
  }
  if (j.contains("masks")) {
    for (const auto& m : j["masks"]) cfg.mask_paths.push_back(m);
  }
  if (j.contains("gt_masks")) {
    for (const auto& m : j["gt_masks"]) cfg.gt_mask_paths.push_back(m);
  }

  const json& cam = j.at("camera");
  cfg.camera.fx = cam.at("fx");
  cfg.camera.fy = cam.at("fy");
  cfg.camera.cx = cam.at("cx");
  cfg.camera.cy = cam.at("cy");
  cfg.camera.width = cam.at("width");
  cfg.camera.height = cam.at("height");

  if (j.contains("calibration")) {
    const json& c = j["calibration"];
    cfg.run_calibration = c.value("enabled", false);
    cfg.calib.bins = static_cast<int>(json_num(c, "bins", cfg.calib.bins));
    cfg.calib.optimizer.max_iters = static_cast<int>(
        json_num(c, "max_iters", cfg.calib.optimizer.max_iters));
    cfg.calib.optimizer.simplex_tolerance =
        json_num(c, "tolerance", cfg.calib.optimizer.simplex_tolerance);
    if (c.contains("initial_step")) {
      const double s = c["initial_step"];
      cfg.calib.optimizer.initial_step.setConstant(s);
    }
  }
  if (j.contains("sor")) {
    cfg.sor_k = static_cast<std::size_t>(json_num(j["sor"], "k", 60));
    cfg.sor_n_sigma = json_num(j["sor"], "n_sigma", 1.0);
  }
  if (j.contains("mls")) {
    cfg.mls.search_radius = json_num(j["mls"], "search_radius", 0.0);
    cfg.mls.polynomial_degree =
        static_cast<int>(json_num(j["mls"], "degree", 2));
  }
  if (j.contains("fusion")) {
    const json& f = j["fusion"];
    cfg.fusion.lambda1 = json_num(f, "lambda1", cfg.fusion.lambda1);
    cfg.fusion.lambda2 = json_num(f, "lambda2", cfg.fusion.lambda2);
    cfg.fusion.ideal_distance =
        json_num(f, "ideal_distance", cfg.fusion.ideal_distance);
    cfg.fusion.sigma = json_num(f, "sigma", cfg.fusion.sigma);
    cfg.fusion.top_n = static_cast<int>(json_num(f, "top_n", cfg.fusion.top_n));
    cfg.fusion.hpr_radius_scale =
        json_num(f, "hpr_radius_scale", cfg.fusion.hpr_radius_scale);
  }
  if (j.contains("metrology")) {
    const json& m = j["metrology"];
    cfg.metrology.window =
        static_cast<int>(json_num(m, "window", cfg.metrology.window));
    cfg.metrology.gaussian_sigma =
        json_num(m, "gaussian_sigma", cfg.metrology.gaussian_sigma);
    cfg.metrology.plane_k = static_cast<std::size_t>(
        json_num(m, "plane_k", static_cast<double>(cfg.metrology.plane_k)));
    cfg.metrology.sample_radius =
        json_num(m, "sample_radius", cfg.metrology.sample_radius);
    cfg.metrology.sample_step =
        json_num(m, "sample_step", cfg.metrology.sample_step);
  }
  cfg.eval_radius = json_num(j, "eval_radius", cfg.eval_radius);

  // fail on missing inputs before any compute
  require_exists(cfg.cloud_path, "cloud");
  require_exists(cfg.trajectory_path, "trajectory");
  if (!cfg.extrinsic_path.empty()) require_exists(cfg.extrinsic_path, "extrinsic");
  if (!cfg.seeds_path.empty()) require_exists(cfg.seeds_path, "seed list");
  for (const auto& p : cfg.image_paths) require_exists(p, "image");
  for (const auto& p : cfg.mask_paths) require_exists(p, "mask");
  for (const auto& p : cfg.gt_mask_paths) require_exists(p, "ground-truth mask");
  if (!cfg.mask_paths.empty() &&
      cfg.mask_paths.size() != cfg.image_paths.size()) {
    throw InvalidSpec("masks must pair 1:1 with images");
  }
  if (!cfg.camera.valid()) throw InvalidSpec("camera intrinsics invalid");
  return cfg;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  using clock = std::chrono::steady_clock;
  json manifest;
  manifest["version"] = "cracklab 1.0";
  json timings = json::object();
  auto timed = [&](const char* stage, auto&& fn) {
    const auto start = clock::now();
    try {
      fn();
    } catch (const Error& e) {
      throw StageError(stage, e.what());
    }
    timings[stage] =
        std::chrono::duration<double>(clock::now() - start).count();
  };

  fs::create_directories(cfg.output_dir);
  PipelineResult result;

  PointCloud cloud;
  Trajectory trajectory;
  RigidPose extrinsic;
  std::vector<RasterImage> images;
  std::vector<BinaryMask> masks;

  timed("load", [&] {
    cloud = load_point_cloud(cfg.cloud_path);
    trajectory = load_trajectory(cfg.trajectory_path);
    if (!cfg.extrinsic_path.empty()) {
      const Trajectory ext = load_trajectory(cfg.extrinsic_path);
      if (ext.empty()) throw ParseError("empty extrinsic file");
      extrinsic = ext.entries.front();
    }
    for (std::size_t i = 0; i < cfg.image_paths.size(); ++i) {
      RasterImage img = load_image(cfg.image_paths[i]);
      img.timestamp = cfg.image_times[i];
      images.push_back(std::move(img));
      if (!cfg.mask_paths.empty()) {
        masks.push_back(load_mask(cfg.mask_paths[i], images.back().width,
                                  images.back().height));
      }
    }
  });

  auto lidar_pose_at = [&](double t) {
    return interpolate_camera_pose(trajectory.entries, t);
  };
  auto camera_pose_at = [&](double t) {
    // camera-to-world from the LiDAR pose and the LiDAR->camera extrinsic
    return lidar_pose_at(t).compose(extrinsic.inverse());
  };

  if (cfg.run_calibration) {
    timed("calibrate", [&] {
      std::vector<CalibFrame> frames;
      for (std::size_t i = 0; i < images.size(); ++i) {
        frames.push_back({images[i], lidar_pose_at(cfg.image_times[i])});
      }
      extrinsic = refine_extrinsic(cloud, frames, cfg.camera, extrinsic,
                                   cfg.calib);
      save_trajectory(Trajectory{{RigidPose(extrinsic.rotation,
                                            extrinsic.translation, 0.0)}},
                      cfg.output_dir + "/extrinsic_refined.txt");
    });
  }
  result.extrinsic = extrinsic;

  PointCloud denoised;
  timed("denoise", [&] {
    const SorResult sor = sor_filter(cloud, cfg.sor_k, cfg.sor_n_sigma);
    result.sor_removed = sor.removed.size();
    denoised = mls_smooth(sor.kept, cfg.mls).cloud;
  });

  PointCloud fused;
  timed("fuse", [&] {
    std::vector<FusionFrame> frames;
    for (std::size_t i = 0; i < images.size(); ++i) {
      FusionFrame f;
      f.image = images[i];
      if (!masks.empty()) f.mask = masks[i];
      f.camera_pose = camera_pose_at(cfg.image_times[i]);
      frames.push_back(std::move(f));
    }
    fused = fuse_cloud(denoised, frames, cfg.camera, cfg.fusion).cloud;
    result.fused_cloud_path = cfg.output_dir + "/fused.ply";
    save_point_cloud(fused, result.fused_cloud_path);
  });

  timed("measure", [&] {
    std::vector<CrackMeasurement> measurements;
    if (!cfg.seeds_path.empty()) {
      if (masks.empty()) throw InvalidSpec("measure stage needs masks");
      std::vector<BinaryMask> skeletons(masks.size());
      std::vector<bool> have_skel(masks.size(), false);
      for (const SeedEntry& e : load_seeds(cfg.seeds_path)) {
        if (e.frame >= masks.size()) {
          throw OutOfRange("seed frame index out of range");
        }
        if (!have_skel[e.frame]) {
          skeletons[e.frame] = extract_skeleton(masks[e.frame]);
          have_skel[e.frame] = true;
        }
        CrackMeasurement m = measure_crack(
            denoised, masks[e.frame], skeletons[e.frame], e.seed, cfg.camera,
            camera_pose_at(cfg.image_times[e.frame]), cfg.metrology);
        m.crack_id = e.crack_id;
        m.frame_id = std::to_string(e.frame);
        measurements.push_back(std::move(m));
      }
    }
    result.measured = measurements.size();
    result.measurement_report_path = cfg.output_dir + "/measurements.csv";
    write_measurement_report(measurements, result.measurement_report_path);
  });

  timed("eval", [&] {
    const MeanStd density = point_surface_density(fused, cfg.eval_radius);
    const MeanStd rough = surface_roughness(fused, cfg.eval_radius);
    std::ostringstream report;
    report.precision(6);
    report << std::fixed;
    report << "metric,mean,std\n";
    report << "density_r" << cfg.eval_radius << "," << density.mean << ","
           << density.stddev << "\n";
    report << "roughness_m," << rough.mean << "," << rough.stddev << "\n";
    if (!cfg.gt_mask_paths.empty() && !masks.empty()) {
      double sum = 0;
      std::size_t n = std::min(cfg.gt_mask_paths.size(), masks.size());
      for (std::size_t i = 0; i < n; ++i) {
        sum += miou(masks[i], load_mask(cfg.gt_mask_paths[i]));
      }
      report << "miou," << sum / static_cast<double>(n) << ",\n";
    }
    result.metrics_report_path = cfg.output_dir + "/metrics.csv";
    std::ofstream out(result.metrics_report_path, std::ios::binary);
    out << report.str();
  });

  manifest["inputs"] = {{"cloud", cfg.cloud_path},
                        {"trajectory", cfg.trajectory_path},
                        {"extrinsic", cfg.extrinsic_path},
                        {"images", cfg.image_paths},
                        {"masks", cfg.mask_paths},
                        {"seeds", cfg.seeds_path}};
  manifest["parameters"] = {
      {"sor", {{"k", cfg.sor_k}, {"n_sigma", cfg.sor_n_sigma}}},
      {"mls",
       {{"search_radius", cfg.mls.search_radius},
        {"degree", cfg.mls.polynomial_degree}}},
      {"fusion",
       {{"lambda1", cfg.fusion.lambda1},
        {"lambda2", cfg.fusion.lambda2},
        {"ideal_distance", cfg.fusion.ideal_distance},
        {"sigma", cfg.fusion.sigma},
        {"top_n", cfg.fusion.top_n},
        {"hpr_radius_scale", cfg.fusion.hpr_radius_scale}}},
      {"metrology",
       {{"window", cfg.metrology.window},
        {"gaussian_sigma", cfg.metrology.gaussian_sigma},
        {"plane_k", cfg.metrology.plane_k},
        {"sample_radius", cfg.metrology.sample_radius},
        {"sample_step", cfg.metrology.sample_step}}},
      {"calibration",
       {{"enabled", cfg.run_calibration}, {"bins", cfg.calib.bins}}},
      {"eval_radius", cfg.eval_radius}};
  manifest["stats"] = {{"points_in", cloud.size()},
                       {"sor_removed", result.sor_removed},
                       {"measured", result.measured}};
  manifest["timings_s"] = timings;
  manifest["outputs"] = {{"fused_cloud", result.fused_cloud_path},
                         {"measurements", result.measurement_report_path},
                         {"metrics", result.metrics_report_path}};
  result.manifest_path = cfg.output_dir + "/manifest.json";
  std::ofstream mf(result.manifest_path, std::ios::binary);
  mf << manifest.dump(2) << "\n";
  return result;
}

}  // namespace cracklab
