// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "surfrec/image.hpp"
#include "surfrec/io.hpp"
#include "surfrec/rng.hpp"
#include "surfrec/splats.hpp"

using namespace surfrec;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "surfrec_io_test";
  fs::create_directories(d);
  return d;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ImageGrid random_grid(int h, int w, int c, std::uint64_t seed) {
  ImageGrid g(h, w, c);
  for (std::size_t i = 0; i < g.data.size(); ++i)
    g.data[i] = rng::uniform(seed, i);
  return g;
}

}  // namespace

TEST_CASE("bilinear_sample interpolates between pixel centers") {
  ImageGrid g(2, 2, 1);
  g.at(0, 0) = 0.0;
  g.at(0, 1) = 1.0;
  g.at(1, 0) = 2.0;
  g.at(1, 1) = 3.0;
  CHECK(bilinear_sample(g, 0.0, 0.0, 0) == doctest::Approx(0.0));
  CHECK(bilinear_sample(g, 0.5, 0.0, 0) == doctest::Approx(0.5));
  CHECK(bilinear_sample(g, 0.0, 0.5, 0) == doctest::Approx(1.0));
  CHECK(bilinear_sample(g, 0.5, 0.5, 0) == doctest::Approx(1.5));
  // Outside coordinates clamp to the border.
  CHECK(bilinear_sample(g, -5.0, 0.0, 0) == doctest::Approx(0.0));
  CHECK(bilinear_sample(g, 5.0, 5.0, 0) == doctest::Approx(3.0));
}

TEST_CASE("downsample averages factor-sized blocks") {
  ImageGrid g(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) g.at(y, x) = y * 4 + x;
  const ImageGrid q = downsample(g, 2);
  CHECK(q.height == 2);
  CHECK(q.width == 2);
  CHECK(q.at(0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
  CHECK(q.at(1, 1) == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
}

TEST_CASE("upsample_bilinear inverts constant images exactly") {
  ImageGrid g(3, 3, 1);
  for (double& v : g.data) v = 0.37;
  const ImageGrid u = upsample_bilinear(g, 4);
  for (double v : u.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("mse and psnr report known values") {
  ImageGrid a(2, 2, 1), b(2, 2, 1);
  for (double& v : a.data) v = 0.5;
  for (double& v : b.data) v = 0.25;
  CHECK(mse(a, b) == doctest::Approx(0.0625));
  CHECK(psnr(a, b) == doctest::Approx(-10.0 * std::log10(0.0625)));
  CHECK(mse(a, a) == doctest::Approx(0.0));
}

TEST_CASE("pfm round trip is byte identical") {
  const fs::path d = temp_dir();
  for (int channels : {1, 3}) {
    const ImageGrid g = random_grid(7, 5, channels, 42);
    const fs::path p1 = d / "a.pfm";
    const fs::path p2 = d / "b.pfm";
    io::write_pfm(p1.string(), g);
    const ImageGrid r = io::read_pfm(p1.string());
    io::write_pfm(p2.string(), r);
    CHECK(file_bytes(p1) == file_bytes(p2));
    REQUIRE(r.height == g.height);
    REQUIRE(r.width == g.width);
    REQUIRE(r.channels == g.channels);
    for (std::size_t i = 0; i < g.data.size(); ++i)
      CHECK(r.data[i] == doctest::Approx(g.data[i]).epsilon(1e-6));
  }
}

TEST_CASE("png round trip preserves quantized values") {
  const fs::path d = temp_dir();
  const ImageGrid g = random_grid(6, 9, 3, 43);
  const fs::path p1 = d / "a.png";
  const fs::path p2 = d / "b.png";
  io::write_png(p1.string(), g);
  const ImageGrid r = io::read_png(p1.string());
  io::write_png(p2.string(), r);
  CHECK(file_bytes(p1) == file_bytes(p2));
  for (std::size_t i = 0; i < g.data.size(); ++i)
    CHECK(std::abs(r.data[i] - g.data[i]) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("mesh ply round trip is exact") {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1.25e-17, 2, 3), Vec3(0.1, 0.2, 0.3)};
  m.faces = {{0, 1, 2}};
  const fs::path p = temp_dir() / "mesh.ply";
  io::write_mesh_ply(p.string(), m);
  const TriangleMesh r = io::read_mesh_ply(p.string());
  REQUIRE(r.vertices.size() == m.vertices.size());
  REQUIRE(r.faces == m.faces);
  for (std::size_t i = 0; i < m.vertices.size(); ++i)
    CHECK((r.vertices[i] - m.vertices[i]).norm() == 0.0);
}

TEST_CASE("mesh obj round trip preserves geometry") {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  m.faces = {{0, 1, 2}, {1, 3, 2}};
  const fs::path p = temp_dir() / "mesh.obj";
  io::write_mesh_obj(p.string(), m);
  const TriangleMesh r = io::read_mesh(p.string());
  REQUIRE(r.faces.size() == 2);
  CHECK(r.faces == m.faces);
}

TEST_CASE("splat field ply round trip renders identically") {
  SplatField f;
  for (int i = 0; i < 5; ++i) {
    Splat2D s;
    s.mu = Vec3(rng::uniform(9, i, 0), rng::uniform(9, i, 1),
                1.0 + rng::uniform(9, i, 2));
    s.scale = {0.01 + 0.1 * rng::uniform(9, i, 3),
               0.01 + 0.1 * rng::uniform(9, i, 4)};
    s.q = Quat(1.0, 0.2 * rng::uniform(9, i, 5), 0.1, 0.0).normalized();
    s.alpha = rng::uniform(9, i, 6);
    s.color = Vec3(0.2, 0.4, 0.8);
    f.splats.push_back(s);
  }
  const fs::path p = temp_dir() / "splats.ply";
  io::write_splats_ply(p.string(), f);
  const SplatField r = io::read_splats_ply(p.string());
  REQUIRE(r.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK((r.splats[i].mu - f.splats[i].mu).norm() == 0.0);
    CHECK((r.splats[i].scale - f.splats[i].scale).norm() == 0.0);
    CHECK(r.splats[i].q.coeffs() == f.splats[i].q.coeffs());
    CHECK(r.splats[i].alpha == f.splats[i].alpha);
    CHECK((r.splats[i].color - f.splats[i].color).norm() == 0.0);
  }
}

TEST_CASE("cameras json round trip is exact") {
  std::vector<io::CameraRecord> cams(2);
  cams[0].intrinsics.fx = 100.5;
  cams[0].intrinsics.fy = 101.25;
  cams[0].intrinsics.cx = 31.5;
  cams[0].intrinsics.cy = 31.5;
  cams[0].intrinsics.width = cams[0].intrinsics.height = 64;
  cams[0].pose = CameraPose::look_at(Vec3(0.1, 0.2, -3), Vec3(0, 0, 1));
  cams[0].near = 0.5;
  cams[0].far = 15.0;
  cams[1] = cams[0];
  cams[1].pose = CameraPose::look_at(Vec3(-0.4, 0.0, -2.5), Vec3(0.2, 0, 1));
  const fs::path p = temp_dir() / "cameras.json";
  io::write_cameras_json(p.string(), cams);
  const auto r = io::read_cameras_json(p.string());
  REQUIRE(r.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(r[i].intrinsics.fx == cams[i].intrinsics.fx);
    CHECK(r[i].intrinsics.cx == cams[i].intrinsics.cx);
    CHECK(r[i].pose.q.coeffs() == cams[i].pose.q.coeffs());
    CHECK((r[i].pose.t - cams[i].pose.t).norm() == 0.0);
    CHECK(r[i].near == cams[i].near);
    CHECK(r[i].far == cams[i].far);
  }
}

TEST_CASE("malformed inputs raise schema errors") {
  const fs::path d = temp_dir();
  {
    std::ofstream out(d / "bad.pfm", std::ios::binary);
    out << "P6\n2 2\n-1\n";
  }
  CHECK_THROWS_AS(io::read_pfm((d / "bad.pfm").string()), io::SchemaError);
  {
    std::ofstream out(d / "bad.json");
    out << "{\"cameras\": [{\"fx\": 1.0}]}";
  }
  CHECK_THROWS_AS(io::read_cameras_json((d / "bad.json").string()),
                  io::SchemaError);
  {
    std::ofstream out(d / "bad.ply");
    out << "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\n"
           "end_header\n";
  }
  CHECK_THROWS_AS(io::read_mesh_ply((d / "bad.ply").string()),
                  io::SchemaError);
  CHECK_THROWS_AS(io::read_pfm((d / "missing_file.pfm").string()),
                  std::runtime_error);
}
