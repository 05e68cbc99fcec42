#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cracklab/pipeline.hpp"

using namespace cracklab;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(CRACKLAB_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// synthesizes a scene once per process and returns its directory
const fs::path& scene_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "cracklab_pipeline_scene";
    fs::remove_all(d);
    const fs::path spec = fs::temp_directory_path() / "pipeline_spec.json";
    std::ofstream(spec) << R"({
      "extent_s": 0.1, "extent_t": 0.1,
      "cloud_spacing": 0.002, "noise_sigma": 0.0003,
      "texture_seed": 9, "rng_seed": 5,
      "cracks": [{"centerline": [[0.02, 0.05], [0.05, 0.05], [0.08, 0.05]],
                  "widths": [0.001, 0.001, 0.001]}],
      "camera": {"fx": 3000, "fy": 3000, "cx": 320, "cy": 320,
                 "width": 640, "height": 640},
      "camera_path": [
        {"time": 0.0, "t": [0.05, 0.05, 0.305], "q": [0, 1, 0, 0]},
        {"time": 1.0, "t": [0.05, 0.03, 0.315],
         "q": [0, 0.99875026, 0.04998958, 0]}
      ]
    })";
    REQUIRE(run_cli("synth --spec " + spec.string() + " --out " + d.string()) ==
            0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("full pipeline runs end to end") {
  PipelineConfig cfg =
      load_pipeline_config((scene_dir() / "pipeline_config.json").string());
  cfg.output_dir = (scene_dir() / "run_a").string();
  const PipelineResult res = run_pipeline(cfg);

  CHECK(fs::exists(res.fused_cloud_path));
  CHECK(fs::exists(res.measurement_report_path));
  CHECK(fs::exists(res.metrics_report_path));
  CHECK(fs::exists(res.manifest_path));
  CHECK(res.measured == 1);

  // one measurement row; width near the synthesized 1 mm
  std::ifstream report(res.measurement_report_path);
  std::string header, row;
  REQUIRE(std::getline(report, header));
  REQUIRE(std::getline(report, row));
  const auto last_comma = row.rfind(',');
  const double width_mm = std::stod(row.substr(last_comma + 1));
  CHECK(width_mm > 0.8);
  CHECK(width_mm < 1.2);

  // gt masks equal the input masks, so the mIoU row must be exactly 1
  const std::string metrics = slurp(res.metrics_report_path);
  CHECK(metrics.find("miou,1.000000") != std::string::npos);
  CHECK(metrics.find("density") != std::string::npos);
  CHECK(metrics.find("roughness") != std::string::npos);
}

TEST_CASE("two runs produce byte-identical reports") {
  PipelineConfig cfg =
      load_pipeline_config((scene_dir() / "pipeline_config.json").string());
  cfg.output_dir = (scene_dir() / "run_b").string();
  const PipelineResult first = run_pipeline(cfg);
  cfg.output_dir = (scene_dir() / "run_c").string();
  const PipelineResult second = run_pipeline(cfg);

  CHECK(slurp(first.fused_cloud_path) == slurp(second.fused_cloud_path));
  CHECK(slurp(first.measurement_report_path) ==
        slurp(second.measurement_report_path));
  CHECK(slurp(first.metrics_report_path) ==
        slurp(second.metrics_report_path));
}

TEST_CASE("config validation fails before any compute") {
  const fs::path cfg_path = fs::temp_directory_path() / "bad_config.json";
  std::ofstream(cfg_path) << R"({
    "cloud": "/nonexistent/cloud.ply",
    "trajectory": "/nonexistent/traj.txt",
    "camera": {"fx": 100, "fy": 100, "cx": 50, "cy": 50,
               "width": 100, "height": 100},
    "images": []
  })";
  CHECK_THROWS_AS(load_pipeline_config(cfg_path.string()), IoError);

  const fs::path garbled = fs::temp_directory_path() / "garbled_config.json";
  std::ofstream(garbled) << "{not json";
  CHECK_THROWS_AS(load_pipeline_config(garbled.string()), ParseError);
}

TEST_CASE("CLI exit codes") {
  CHECK(run_cli("") == 2);                    // missing subcommand
  CHECK(run_cli("--bogus-flag") == 2);        // unknown option
  CHECK(run_cli("run") == 2);                 // missing required option
  CHECK(run_cli("run --config /nonexistent/cfg.json") == 1);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("denoise --cloud /nonexistent.ply --out /tmp/x.ply") == 1);
}

TEST_CASE("CLI run succeeds on the synthesized config") {
  CHECK(run_cli("run --config " +
                (scene_dir() / "pipeline_config.json").string()) == 0);
  CHECK(fs::exists(scene_dir() / "run" / "manifest.json"));
}
