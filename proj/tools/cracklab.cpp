#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cracklab/io.hpp"
#include "cracklab/mask_pipeline.hpp"
#include "cracklab/metrics.hpp"
#include "cracklab/pipeline.hpp"
#include "cracklab/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cracklab;

namespace {

CameraModel camera_from_json(const json& c) {
  CameraModel cam;
  cam.fx = c.at("fx");
  cam.fy = c.at("fy");
  cam.cx = c.at("cx");
  cam.cy = c.at("cy");
  cam.width = c.at("width");
  cam.height = c.at("height");
  if (!cam.valid()) throw InvalidSpec("camera intrinsics invalid");
  return cam;
}

CameraModel load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera file: " + path);
  json j;
  in >> j;
  return camera_from_json(j);
}

SceneSpec scene_spec_from_json(const json& j) {
  SceneSpec spec;
  const std::string surface = j.value("surface", "plane");
  if (surface == "plane") {
    spec.surface = SurfaceKind::Plane;
  } else if (surface == "box") {
    spec.surface = SurfaceKind::Box;
  } else if (surface == "cylinder") {
    spec.surface = SurfaceKind::Cylinder;
  } else {
    throw InvalidSpec("unknown surface kind: " + surface);
  }
  spec.extent_s = j.value("extent_s", spec.extent_s);
  spec.extent_t = j.value("extent_t", spec.extent_t);
  spec.depth = j.value("depth", spec.depth);
  spec.radius = j.value("radius", spec.radius);
  spec.crack_darkening = j.value("crack_darkening", spec.crack_darkening);
  spec.texture_scale = j.value("texture_scale", spec.texture_scale);
  spec.texture_octaves = j.value("texture_octaves", spec.texture_octaves);
  spec.texture_seed = j.value("texture_seed", spec.texture_seed);
  spec.cloud_spacing = j.value("cloud_spacing", spec.cloud_spacing);
  spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
  spec.rng_seed = j.value("rng_seed", spec.rng_seed);
  if (j.contains("cracks")) {
    for (const auto& c : j["cracks"]) {
      CrackBand band;
      for (const auto& p : c.at("centerline")) {
        band.centerline.emplace_back(p.at(0).get<double>(),
                                     p.at(1).get<double>());
      }
      for (const auto& w : c.at("widths")) band.widths.push_back(w);
      spec.cracks.push_back(std::move(band));
    }
  }
  spec.camera = camera_from_json(j.at("camera"));
  for (const auto& p : j.at("camera_path")) {
    const auto& t = p.at("t");
    const auto& q = p.at("q");
    spec.camera_path.emplace_back(
        Quat(q.at(0), q.at(1), q.at(2), q.at(3)),
        Vec3(t.at(0), t.at(1), t.at(2)), p.at("time").get<double>());
  }
  return spec;
}

std::string frame_name(const char* stem, std::size_t i) {
  std::ostringstream ss;
  ss << stem << std::setw(3) << std::setfill('0') << i << ".pgm";
  return ss.str();
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw IoError("cannot open scene spec: " + spec_path);
  json j;
  in >> j;
  const SceneSpec spec = scene_spec_from_json(j);
  SyntheticScene scene = generate_scene(spec);

  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/images");
  fs::create_directories(out_dir + "/masks");

  scene.cloud.label = scene.truth.labels;  // ground-truth labels travel along
  save_point_cloud(scene.cloud, out_dir + "/cloud.ply");
  save_trajectory(scene.trajectory, out_dir + "/trajectory.txt");

  json cam = {{"fx", spec.camera.fx},   {"fy", spec.camera.fy},
              {"cx", spec.camera.cx},   {"cy", spec.camera.cy},
              {"width", spec.camera.width}, {"height", spec.camera.height}};
  std::ofstream(out_dir + "/camera.json") << cam.dump(2) << "\n";

  json cfg;
  cfg["cloud"] = out_dir + "/cloud.ply";
  cfg["trajectory"] = out_dir + "/trajectory.txt";
  cfg["camera"] = cam;
  cfg["output_dir"] = out_dir + "/run";
  cfg["images"] = json::array();
  cfg["masks"] = json::array();
  cfg["gt_masks"] = json::array();
  for (std::size_t i = 0; i < scene.images.size(); ++i) {
    const std::string img_path = out_dir + "/images/" + frame_name("frame_", i);
    const std::string mask_path = out_dir + "/masks/" + frame_name("mask_", i);
    save_image(scene.images[i], img_path);
    save_mask(scene.masks[i], mask_path);
    cfg["images"].push_back(
        {{"path", img_path}, {"time", *spec.camera_path[i].timestamp}});
    cfg["masks"].push_back(mask_path);
    cfg["gt_masks"].push_back(mask_path);
  }

  // one seed per crack: centerline midpoint projected into frame 0
  if (!spec.cracks.empty() && !spec.camera_path.empty()) {
    std::ofstream seeds(out_dir + "/seeds.txt");
    const RigidPose& pose = spec.camera_path.front();
    const RigidPose world_to_cam = pose.inverse();
    int crack_id = 0;
    for (const auto& band : spec.cracks) {
      const auto& mid = band.centerline[band.centerline.size() / 2];
      const Vec3 p = surface_point(spec, mid.x(), mid.y());
      const Vec3 p_cam = transform_point(world_to_cam, p);
      if (p_cam.z() > 0) {
        const Pixel px = project(spec.camera, p_cam);
        if (spec.camera.in_frame(px)) {
          seeds << crack_id << " " << std::lround(px.u) << " "
                << std::lround(px.v) << " 0\n";
        }
      }
      ++crack_id;
    }
    cfg["seeds"] = out_dir + "/seeds.txt";
  }
  std::ofstream(out_dir + "/pipeline_config.json") << cfg.dump(2) << "\n";
  std::cerr << "synth: " << scene.cloud.size() << " points, "
            << scene.images.size() << " frames -> " << out_dir << "\n";
  return 0;
}

RigidPose load_extrinsic(const std::string& path) {
  if (path.empty()) return RigidPose::identity();
  const Trajectory t = load_trajectory(path);
  if (t.empty()) throw ParseError("empty extrinsic file: " + path);
  return t.entries.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometry engine and batch CLI for crack reconstruction"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  std::string synth_spec, synth_out = "scene";
  synth->add_option("--spec", synth_spec, "scene spec JSON")->required();
  synth->add_option("--out", synth_out, "output directory");

  // calibrate
  auto* calibrate =
      app.add_subcommand("calibrate", "refine a LiDAR-camera extrinsic");
  std::string cal_cloud, cal_traj, cal_camera, cal_initial, cal_out;
  std::vector<std::string> cal_images;
  std::vector<double> cal_times;
  int cal_bins = 32, cal_iters = 300;
  calibrate->add_option("--cloud", cal_cloud)->required();
  calibrate->add_option("--trajectory", cal_traj)->required();
  calibrate->add_option("--camera", cal_camera, "camera JSON")->required();
  calibrate->add_option("--image", cal_images)->required();
  calibrate->add_option("--time", cal_times)->required();
  calibrate->add_option("--initial", cal_initial, "initial extrinsic");
  calibrate->add_option("--out", cal_out)->required();
  calibrate->add_option("--bins", cal_bins);
  calibrate->add_option("--max-iters", cal_iters);

  // refine-mask
  auto* refine = app.add_subcommand("refine-mask", "prompt-based mask refinement");
  std::string rm_image, rm_mask, rm_out, rm_refiner = "identity";
  RefineParams rm_params;
  refine->add_option("--image", rm_image)->required();
  refine->add_option("--mask", rm_mask)->required();
  refine->add_option("--out", rm_out)->required();
  refine->add_option("--refiner", rm_refiner,
                     "identity|dilate|flood|holes|external:<cmd>");
  refine->add_option("--top-k", rm_params.top_k);
  refine->add_option("--min-dist", rm_params.min_dist);
  refine->add_option("--cluster-eps", rm_params.cluster_eps);
  refine->add_option("--cluster-min-pts", rm_params.cluster_min_pts);
  refine->add_option("--crop-dilation", rm_params.crop_dilation);
  refine->add_option("--max-size-ratio", rm_params.max_size_ratio);
  refine->add_option("--max-holes", rm_params.max_holes);

  // denoise
  auto* denoise = app.add_subcommand("denoise", "SOR + MLS cleanup");
  std::string dn_cloud, dn_out;
  std::size_t dn_k = 60;
  double dn_nsigma = 1.0;
  MlsConfig dn_mls;
  denoise->add_option("--cloud", dn_cloud)->required();
  denoise->add_option("--out", dn_out)->required();
  denoise->add_option("--k", dn_k);
  denoise->add_option("--n-sigma", dn_nsigma);
  denoise->add_option("--mls-radius", dn_mls.search_radius);
  denoise->add_option("--mls-degree", dn_mls.polynomial_degree);

  // fuse
  auto* fuse = app.add_subcommand("fuse", "multi-view color/label fusion");
  std::string fu_cloud, fu_traj, fu_camera, fu_extrinsic, fu_out;
  std::vector<std::string> fu_images, fu_masks;
  std::vector<double> fu_times;
  FusionConfig fu_cfg;
  fuse->add_option("--cloud", fu_cloud)->required();
  fuse->add_option("--trajectory", fu_traj)->required();
  fuse->add_option("--camera", fu_camera)->required();
  fuse->add_option("--extrinsic", fu_extrinsic);
  fuse->add_option("--image", fu_images)->required();
  fuse->add_option("--time", fu_times)->required();
  fuse->add_option("--mask", fu_masks);
  fuse->add_option("--out", fu_out)->required();
  fuse->add_option("--lambda1", fu_cfg.lambda1);
  fuse->add_option("--lambda2", fu_cfg.lambda2);
  fuse->add_option("--ideal-distance", fu_cfg.ideal_distance);
  fuse->add_option("--sigma", fu_cfg.sigma);
  fuse->add_option("--top-n", fu_cfg.top_n);

  // measure
  auto* measure = app.add_subcommand("measure", "crack width measurement");
  std::string me_cloud, me_traj, me_camera, me_extrinsic, me_seeds, me_out;
  std::vector<std::string> me_masks;
  std::vector<double> me_times;
  MetrologyParams me_params;
  measure->add_option("--cloud", me_cloud)->required();
  measure->add_option("--trajectory", me_traj)->required();
  measure->add_option("--camera", me_camera)->required();
  measure->add_option("--extrinsic", me_extrinsic);
  measure->add_option("--mask", me_masks)->required();
  measure->add_option("--time", me_times)->required();
  measure->add_option("--seeds", me_seeds)->required();
  measure->add_option("--out", me_out)->required();
  measure->add_option("--sample-step", me_params.sample_step);
  measure->add_option("--sample-radius", me_params.sample_radius);
  measure->add_option("--plane-k", me_params.plane_k);

  // eval
  auto* eval = app.add_subcommand("eval", "segmentation/cloud metrics");
  std::string ev_pred, ev_gt, ev_cloud, ev_out;
  double ev_radius = 0.01;
  eval->add_option("--pred", ev_pred, "predicted mask");
  eval->add_option("--gt", ev_gt, "ground-truth mask");
  eval->add_option("--cloud", ev_cloud);
  eval->add_option("--radius", ev_radius);
  eval->add_option("--out", ev_out, "report path (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "full batch pipeline");
  std::string run_config;
  run->add_option("--config", run_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*synth) return cmd_synth(synth_spec, synth_out);

    if (*calibrate) {
      if (cal_images.size() != cal_times.size()) {
        std::cerr << "--image and --time counts differ\n";
        return 2;
      }
      const PointCloud cloud = load_point_cloud(cal_cloud);
      const Trajectory traj = load_trajectory(cal_traj);
      const CameraModel cam = load_camera(cal_camera);
      std::vector<CalibFrame> frames;
      for (std::size_t i = 0; i < cal_images.size(); ++i) {
        frames.push_back(
            {load_image(cal_images[i]),
             interpolate_camera_pose(traj.entries, cal_times[i])});
      }
      CalibConfig cfg;
      cfg.bins = cal_bins;
      cfg.optimizer.max_iters = cal_iters;
      const RigidPose initial = load_extrinsic(cal_initial);
      const RigidPose refined =
          refine_extrinsic(cloud, frames, cam, initial, cfg);
      save_trajectory(
          Trajectory{{RigidPose(refined.rotation, refined.translation, 0.0)}},
          cal_out);
      std::cerr << "calibrate: mean NID "
                << mean_nid(cloud, frames, cam, initial, cfg.bins) << " -> "
                << mean_nid(cloud, frames, cam, refined, cfg.bins) << "\n";
      return 0;
    }

    if (*refine) {
      const RasterImage image = load_image(rm_image);
      const BinaryMask base = load_mask(rm_mask, image.width, image.height);
      auto refiner = make_refiner(rm_refiner);
      const RefineReport report = refine_mask(image, base, *refiner, rm_params);
      save_mask(report.mask, rm_out);
      std::cerr << "refine-mask: " << report.prompts.points.size()
                << " prompts, " << report.crops_accepted << " accepted, "
                << report.crops_rejected << " rejected, "
                << report.refiner_failures << " failed\n";
      return 0;
    }

    if (*denoise) {
      const PointCloud cloud = load_point_cloud(dn_cloud);
      const SorResult sor = sor_filter(cloud, dn_k, dn_nsigma);
      const MlsResult mls = mls_smooth(sor.kept, dn_mls);
      save_point_cloud(mls.cloud, dn_out);
      std::cerr << "denoise: removed " << sor.removed.size() << " of "
                << cloud.size() << " points; MLS fallbacks "
                << mls.fallback_count << "\n";
      return 0;
    }

    if (*fuse) {
      if (fu_images.size() != fu_times.size() ||
          (!fu_masks.empty() && fu_masks.size() != fu_images.size())) {
        std::cerr << "--image/--time/--mask counts differ\n";
        return 2;
      }
      const PointCloud cloud = load_point_cloud(fu_cloud);
      const Trajectory traj = load_trajectory(fu_traj);
      const CameraModel cam = load_camera(fu_camera);
      const RigidPose extrinsic = load_extrinsic(fu_extrinsic);
      std::vector<FusionFrame> frames;
      for (std::size_t i = 0; i < fu_images.size(); ++i) {
        FusionFrame f;
        f.image = load_image(fu_images[i]);
        if (!fu_masks.empty()) {
          f.mask = load_mask(fu_masks[i], f.image.width, f.image.height);
        }
        f.camera_pose = interpolate_camera_pose(traj.entries, fu_times[i])
                            .compose(extrinsic.inverse());
        frames.push_back(std::move(f));
      }
      const FuseResult fused = fuse_cloud(cloud, frames, cam, fu_cfg);
      save_point_cloud(fused.cloud, fu_out);
      std::size_t colored = 0;
      for (std::size_t s : fused.support) colored += s > 0;
      std::cerr << "fuse: " << colored << "/" << cloud.size()
                << " points observed\n";
      return 0;
    }

    if (*measure) {
      if (me_masks.size() != me_times.size()) {
        std::cerr << "--mask and --time counts differ\n";
        return 2;
      }
      const PointCloud cloud = load_point_cloud(me_cloud);
      const Trajectory traj = load_trajectory(me_traj);
      const CameraModel cam = load_camera(me_camera);
      const RigidPose extrinsic = load_extrinsic(me_extrinsic);
      std::vector<BinaryMask> masks, skeletons;
      for (const auto& p : me_masks) {
        masks.push_back(load_mask(p));
        skeletons.push_back(extract_skeleton(masks.back()));
      }
      std::ifstream seeds(me_seeds);
      if (!seeds) throw IoError("cannot open seed list: " + me_seeds);
      std::vector<CrackMeasurement> ms;
      std::string line;
      while (std::getline(seeds, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        int crack_id;
        Pixel seed;
        std::size_t frame;
        if (!(ss >> crack_id >> seed.u >> seed.v >> frame)) {
          throw ParseError("bad seed line: " + line);
        }
        if (frame >= masks.size()) throw OutOfRange("seed frame out of range");
        CrackMeasurement m = measure_crack(
            cloud, masks[frame], skeletons[frame], seed, cam,
            interpolate_camera_pose(traj.entries, me_times[frame])
                .compose(extrinsic.inverse()),
            me_params);
        m.crack_id = crack_id;
        m.frame_id = std::to_string(frame);
        ms.push_back(std::move(m));
      }
      write_measurement_report(ms, me_out);
      std::cerr << "measure: " << ms.size() << " sites -> " << me_out << "\n";
      return 0;
    }

    if (*eval) {
      std::ostringstream report;
      report << std::fixed << std::setprecision(6);
      report << "metric,mean,std\n";
      if (!ev_pred.empty() && !ev_gt.empty()) {
        report << "miou," << miou(load_mask(ev_pred), load_mask(ev_gt))
               << ",\n";
      }
      if (!ev_cloud.empty()) {
        const PointCloud cloud = load_point_cloud(ev_cloud);
        const MeanStd density = point_surface_density(cloud, ev_radius);
        const MeanStd rough = surface_roughness(cloud, ev_radius);
        report << "density_r" << ev_radius << "," << density.mean << ","
               << density.stddev << "\n";
        report << "roughness_m," << rough.mean << "," << rough.stddev << "\n";
      }
      if (ev_out.empty()) {
        std::cout << report.str();
      } else {
        std::ofstream(ev_out, std::ios::binary) << report.str();
      }
      return 0;
    }

    if (*run) {
      const PipelineConfig cfg = load_pipeline_config(run_config);
      const PipelineResult res = run_pipeline(cfg);
      std::cerr << "run: fused " << res.fused_cloud_path << ", "
                << res.measured << " measurements, manifest "
                << res.manifest_path << "\n";
      return 0;
    }
  } catch (const StageError& e) {
    std::cerr << "stage failure " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
