#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "cracklab/geometry.hpp"
#include "cracklab/io.hpp"
#include "cracklab/kdtree.hpp"

using namespace cracklab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "cracklab_core_tests";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

}  // namespace

TEST_CASE("pinhole projection") {
  CameraModel cam{1000, 1000, 320, 240, 640, 480};
  const Pixel px = project(cam, {0.1, 0.05, 2.0});
  CHECK(px.u == doctest::Approx(320 + 1000 * 0.05));
  CHECK(px.v == doctest::Approx(240 + 1000 * 0.025));
  CHECK(project(cam, {0, 0, 1}).u == doctest::Approx(320));
  CHECK_THROWS_AS(project(cam, {0, 0, -1}), BehindCamera);
  CHECK_THROWS_AS(project(cam, {0, 0, 0}), BehindCamera);
}

TEST_CASE("projection through an extrinsic equals transform-then-project") {
  CameraModel cam{800, 820, 310, 255, 640, 512};
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const RigidPose pose(Quat(u(rng), u(rng), u(rng), u(rng)).normalized(),
                         {u(rng), u(rng), u(rng)});
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 p_cam = transform_point(pose, p);
    if (p_cam.z() <= 0) continue;
    const Pixel a = project_lidar_point(cam, pose, p);
    const Pixel b = project(cam, p_cam);
    CHECK(a.u == doctest::Approx(b.u).epsilon(1e-12));
    CHECK(a.v == doctest::Approx(b.v).epsilon(1e-12));
  }
}

TEST_CASE("slerp endpoints and midpoint angle") {
  const RigidPose p0(Quat::Identity(), {0, 0, 0}, 0.0);
  const RigidPose p1(Quat(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ())),
                     {1, 2, 3}, 1.0);
  CHECK(slerp_pose(p0, p1, 0.0).rotation_angle_to(p0) ==
        doctest::Approx(0).epsilon(1e-12));
  CHECK(slerp_pose(p0, p1, 1.0).rotation_angle_to(p1) ==
        doctest::Approx(0).epsilon(1e-12));

  const RigidPose mid = slerp_pose(p0, p1, 0.5);
  // constant angular rate: the midpoint sits at a quarter turn's half
  CHECK(mid.rotation_angle_to(p0) == doctest::Approx(M_PI / 4).epsilon(1e-9));
  CHECK(mid.rotation_angle_to(p1) == doctest::Approx(M_PI / 4).epsilon(1e-9));
  CHECK(mid.translation.isApprox(Vec3(0.5, 1.0, 1.5)));
}

TEST_CASE("slerp takes the short way around") {
  const Quat q0 = Quat::Identity();
  Quat q1(Eigen::AngleAxisd(0.2, Vec3::UnitY()));
  q1.coeffs() *= -1;  // same rotation, opposite sign
  const RigidPose mid = slerp_pose(RigidPose(q0, Vec3::Zero()),
                                   RigidPose(q1, Vec3::Zero()), 0.5);
  CHECK(mid.rotation_angle_to(RigidPose(q0, Vec3::Zero())) ==
        doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("slerp matches the closed-form geodesic on random pairs") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    Quat q0(u(rng), u(rng), u(rng), u(rng));
    Quat q1(u(rng), u(rng), u(rng), u(rng));
    q0.normalize();
    q1.normalize();
    const double t = (u(rng) + 1) / 2;
    const RigidPose r = slerp_pose(RigidPose(q0, Vec3::Zero()),
                                   RigidPose(q1, Vec3::Zero()), t);
    const Quat expected = q0.slerp(t, q1);  // independent oracle
    CHECK(std::abs(std::abs(r.rotation.dot(expected)) - 1.0) < 1e-9);
  }
}

TEST_CASE("trajectory interpolation hits stamps exactly and rejects outside") {
  std::vector<RigidPose> traj;
  for (int i = 0; i <= 4; ++i) {
    traj.emplace_back(Quat(Eigen::AngleAxisd(0.1 * i, Vec3::UnitX())),
                      Vec3(i, 0, 0), static_cast<double>(i));
  }
  const RigidPose exact = interpolate_camera_pose(traj, 2.0);
  CHECK(exact.translation.x() == doctest::Approx(2.0));
  const RigidPose mid = interpolate_camera_pose(traj, 2.5);
  CHECK(mid.translation.x() == doctest::Approx(2.5));
  CHECK_THROWS_AS(interpolate_camera_pose(traj, -0.1), OutOfRange);
  CHECK_THROWS_AS(interpolate_camera_pose(traj, 4.1), OutOfRange);
}

TEST_CASE("pose compose/inverse round trip") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const RigidPose p(Quat(u(rng), u(rng), u(rng), u(rng)).normalized(),
                      {u(rng), u(rng), u(rng)});
    const Vec3 x(u(rng), u(rng), u(rng));
    const Vec3 back = transform_point(p.inverse(), transform_point(p, x));
    CHECK((back - x).norm() < 1e-12);
    const RigidPose ident = p.compose(p.inverse());
    CHECK(ident.translation.norm() < 1e-12);
    CHECK(ident.rotation_angle_to(RigidPose::identity()) < 1e-9);
  }
}

TEST_CASE("PLY ascii round trip with attributes") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1.25, -2.5, 3e-4}, {-7, 8, 9}};
  cloud.intensity = {0.5f, 0.25f, 1.0f};
  cloud.color = {Rgb{255, 0, 0}, Rgb{0, 255, 0}, Rgb{0, 0, 255}};
  cloud.label = {0, 1, 0};
  const auto path = (temp_dir() / "ascii.ply").string();
  save_point_cloud(cloud, path, false);
  const PointCloud back = load_point_cloud(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((back.points[i] - cloud.points[i]).norm() < 1e-12);
    CHECK(back.intensity[i] == cloud.intensity[i]);
    CHECK(back.color[i] == cloud.color[i]);
    CHECK(back.label[i] == cloud.label[i]);
  }
}

TEST_CASE("PLY binary round trip preserves doubles bit-exactly") {
  PointCloud cloud;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 257; ++i) {
    cloud.points.emplace_back(u(rng), u(rng), u(rng));
    cloud.intensity.push_back(static_cast<float>(u(rng)));
  }
  const auto path = (temp_dir() / "binary.ply").string();
  save_point_cloud(cloud, path, true);
  const PointCloud back = load_point_cloud(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back.points[i] == cloud.points[i]);
    CHECK(back.intensity[i] == cloud.intensity[i]);
  }
}

TEST_CASE("PLY loader drops non-finite vertices and counts them") {
  const auto path = (temp_dir() / "nan.ply").string();
  std::ofstream out(path);
  out << "ply\nformat ascii 1.0\nelement vertex 3\n"
         "property double x\nproperty double y\nproperty double z\n"
         "end_header\n"
         "0 0 0\nnan 1 2\n3 4 5\n";
  out.close();
  std::size_t dropped = 0;
  const PointCloud cloud = load_point_cloud(path, &dropped);
  CHECK(cloud.size() == 2);
  CHECK(dropped == 1);
}

TEST_CASE("PCD ascii loads points and intensity") {
  const auto path = (temp_dir() / "cloud.pcd").string();
  std::ofstream out(path);
  out << "VERSION .7\nFIELDS x y z intensity\nSIZE 4 4 4 4\n"
         "TYPE F F F F\nCOUNT 1 1 1 1\nWIDTH 2\nHEIGHT 1\n"
         "VIEWPOINT 0 0 0 1 0 0 0\nPOINTS 2\nDATA ascii\n"
         "1 2 3 0.5\n4 5 6 0.75\n";
  out.close();
  const PointCloud cloud = load_point_cloud(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[1] == Vec3(4, 5, 6));
  CHECK(cloud.intensity[0] == doctest::Approx(0.5));
}

TEST_CASE("trajectory round trip and monotonicity check") {
  Trajectory traj;
  traj.entries.emplace_back(Quat::Identity(), Vec3(1, 2, 3), 0.5);
  traj.entries.emplace_back(
      Quat(Eigen::AngleAxisd(0.3, Vec3::UnitY())), Vec3(4, 5, 6), 1.5);
  const auto path = (temp_dir() / "traj.txt").string();
  save_trajectory(traj, path);
  const Trajectory back = load_trajectory(path);
  REQUIRE(back.size() == 2);
  CHECK(*back.entries[1].timestamp == doctest::Approx(1.5));
  CHECK(back.entries[1].rotation_angle_to(traj.entries[1]) < 1e-9);

  const auto bad = (temp_dir() / "bad_traj.txt").string();
  std::ofstream out(bad);
  out << "1.0 0 0 0 1 0 0 0\n0.5 0 0 0 1 0 0 0\n";
  out.close();
  CHECK_THROWS_AS(load_trajectory(bad), NonMonotonicTimestamps);
}

TEST_CASE("PGM/PPM and mask round trips") {
  RasterImage img = RasterImage::gray(7, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) img.at(x, y) = static_cast<uint8_t>(x * 30 + y);
  }
  const auto pgm = (temp_dir() / "img.pgm").string();
  save_image(img, pgm);
  const RasterImage back = load_image(pgm);
  REQUIRE(back.width == 7);
  REQUIRE(back.channels == 1);
  CHECK(back.pixels == img.pixels);

  RasterImage rgb = RasterImage::rgb(3, 2);
  rgb.at(1, 0, 0) = 200;
  rgb.at(2, 1, 2) = 130;
  const auto ppm = (temp_dir() / "img.ppm").string();
  save_image(rgb, ppm);
  CHECK(load_image(ppm).pixels == rgb.pixels);

  BinaryMask mask(4, 3);
  mask.at(1, 1) = 1;
  mask.at(3, 2) = 1;
  const auto mpath = (temp_dir() / "mask.pgm").string();
  save_mask(mask, mpath);
  CHECK(load_mask(mpath) == mask);
  CHECK_THROWS_AS(load_mask(mpath, 5, 3), DimensionMismatch);
}

TEST_CASE("PNG images load") {
  static const unsigned char rgb_png[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d,
      0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
      0x08, 0x02, 0x00, 0x00, 0x00, 0xfd, 0xd4, 0x9a, 0x73, 0x00, 0x00, 0x00,
      0x16, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0xc0,
      0xf0, 0x9f, 0x81, 0x81, 0x81, 0xe1, 0x3f, 0x97, 0x88, 0x1c, 0x00, 0x1a,
      0x58, 0x03, 0x3a, 0x82, 0xe0, 0xab, 0x53, 0x00, 0x00, 0x00, 0x00, 0x49,
      0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  static const unsigned char gray_png[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d,
      0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x01,
      0x08, 0x00, 0x00, 0x00, 0x00, 0xd1, 0x49, 0x20, 0x56, 0x00, 0x00, 0x00,
      0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x60, 0xff, 0x05, 0x00,
      0x01, 0x0b, 0x01, 0x02, 0xc7, 0x5d, 0xfb, 0x23, 0x00, 0x00, 0x00, 0x00,
      0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

  const auto rgb_path = (temp_dir() / "rgb.png").string();
  std::ofstream(rgb_path, std::ios::binary)
      .write(reinterpret_cast<const char*>(rgb_png), sizeof rgb_png);
  const RasterImage rgb = load_image(rgb_path);
  REQUIRE(rgb.width == 2);
  REQUIRE(rgb.height == 2);
  REQUIRE(rgb.channels == 3);
  CHECK(rgb.at(0, 0, 0) == 255);
  CHECK(rgb.at(1, 0, 1) == 255);
  CHECK(rgb.at(0, 1, 2) == 255);
  CHECK(rgb.at(1, 1, 0) == 10);
  CHECK(rgb.at(1, 1, 1) == 20);
  CHECK(rgb.at(1, 1, 2) == 30);

  const auto gray_path = (temp_dir() / "gray.png").string();
  std::ofstream(gray_path, std::ios::binary)
      .write(reinterpret_cast<const char*>(gray_png), sizeof gray_png);
  const RasterImage gray = load_image(gray_path);
  REQUIRE(gray.channels == 1);
  CHECK(gray.at(0, 0) == 7);
  CHECK(gray.at(1, 0) == 250);

  const auto bogus = (temp_dir() / "bogus.xyz").string();
  std::ofstream(bogus) << "XX rubbish";
  CHECK_THROWS_AS(load_image(bogus), UnsupportedFormat);
}

TEST_CASE("measurement report layout") {
  CrackMeasurement m;
  m.crack_id = 3;
  m.frame_id = "0";
  m.seed = {10.5, 20.25};
  m.edge_left_3d = Vec3(0.001, 0.002, 0.003);
  m.edge_right_3d = Vec3(0.001, 0.0025, 0.003);
  m.width = 0.0005;
  const auto path = (temp_dir() / "report.csv").string();
  write_measurement_report({m}, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header ==
        "crack_id,u,v,frame_id,left_x,left_y,left_z,right_x,right_y,right_z,"
        "width_mm");
  CHECK(row.find("0.5") != std::string::npos);  // width in millimeters
}

TEST_CASE("kd-tree matches brute force on randomized clouds") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> nd(1, 200);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = nd(rng);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    // duplicated points stress the index tie-break
    if (n > 4) pts[1] = pts[0];
    KdTree tree(pts);
    const Vec3 q(u(rng), u(rng), u(rng));
    const std::size_t k = 1 + static_cast<std::size_t>(rng() % 8);

    std::vector<std::size_t> brute(pts.size());
    std::iota(brute.begin(), brute.end(), std::size_t{0});
    std::stable_sort(brute.begin(), brute.end(),
                     [&](std::size_t a, std::size_t b) {
                       const double da = (pts[a] - q).squaredNorm();
                       const double db = (pts[b] - q).squaredNorm();
                       if (da != db) return da < db;
                       return a < b;
                     });
    brute.resize(std::min(k, brute.size()));
    CHECK(tree.knn(q, k) == brute);

    const double r = 0.5;
    std::vector<std::size_t> brute_r;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if ((pts[i] - q).squaredNorm() <= r * r) brute_r.push_back(i);
    }
    CHECK(tree.radius(q, r) == brute_r);
  }
}

TEST_CASE("kd-tree self-exclusion") {
  std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  KdTree tree(pts);
  const auto nn = tree.knn(pts[1], 1, 1);
  REQUIRE(nn.size() == 1);
  CHECK(nn[0] != 1);
  const auto rad = tree.radius(pts[1], 10.0, 1);
  CHECK(rad == std::vector<std::size_t>{0, 2});
}
