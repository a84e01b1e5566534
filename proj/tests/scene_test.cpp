// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "surfrec/scene.hpp"

using namespace surfrec;

namespace {

View plane_view(int size = 64) {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 0.6 * size;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  return View{ImageGrid(size, size, 3), intr,
              CameraPose::look_at(Vec3(0, 0, -3), Vec3(0, 0, 0)), 0.5, 15.0};
}

}  // namespace

TEST_CASE("scene meshes have the requested shapes") {
  SceneSpec spec;
  spec.kind = SceneKind::textured_plane;
  spec.dims = Vec3(4, 6, 1);
  const TriangleMesh plane = make_scene(spec);
  CHECK(plane.faces.size() == 2);
  for (const Vec3& v : plane.vertices) {
    CHECK(v.z() == 0.0);
    CHECK(std::abs(v.x()) == doctest::Approx(2.0));
    CHECK(std::abs(v.y()) == doctest::Approx(3.0));
  }

  spec.kind = SceneKind::box_room;
  spec.dims = Vec3(2, 2, 2);
  const TriangleMesh box = make_scene(spec);
  CHECK(box.faces.size() == 12);
  // Inward normals: each face normal points against its centroid offset.
  for (std::size_t f = 0; f < box.faces.size(); ++f)
    CHECK(box.face_normal(f).dot(box.face_centroid(f)) < 0.0);

  spec.kind = SceneKind::sphere_room;
  spec.dims = Vec3(1.5, 0, 0);
  spec.sphere_subdiv = 3;
  const TriangleMesh sphere = make_scene(spec);
  for (const Vec3& v : sphere.vertices)
    CHECK(v.norm() == doctest::Approx(1.5).epsilon(1e-9));
  for (std::size_t f = 0; f < sphere.faces.size(); ++f)
    CHECK(sphere.face_normal(f).dot(sphere.face_centroid(f)) < 0.0);
}

TEST_CASE("ray casting a fronto-parallel plane returns its exact depth") {
  SceneSpec spec;
  spec.kind = SceneKind::textured_plane;
  spec.dims = Vec3(4, 6, 1);
  const TriangleMesh mesh = make_scene(spec);
  const View view = plane_view();
  const OracleRender r = raycast_render(mesh, view, spec.texture);
  const int c = view.intrinsics.width / 2;
  CHECK(r.depth.at(c, c) == doctest::Approx(3.0).epsilon(1e-12));
  // The plane normal faces the camera (-z in camera frame).
  CHECK(r.normal.at(c, c, 2) == doctest::Approx(-1.0));
  // Rays past the plane edge miss: zero depth, black pixel.
  CHECK(r.depth.at(c, 0) == 0.0);
  CHECK(r.image.at(c, 0, 0) == 0.0);
  CHECK(r.image.finite());
}

TEST_CASE("solid texture is deterministic and respects the flat band") {
  SceneTexture tex;
  tex.seed = 5;
  const Vec3 p(0.37, -1.2, 0.01);
  CHECK((tex.color(p) - tex.color(p)).norm() == 0.0);
  SceneTexture other = tex;
  other.seed = 6;
  CHECK((tex.color(p) - other.color(p)).norm() > 0.0);
  tex.flat_band_x = {{-0.5, 0.5}};
  CHECK((tex.color(Vec3(0.0, 0.3, 0.0)) - Vec3(0.5, 0.5, 0.5)).norm() == 0.0);
  CHECK((tex.color(Vec3(0.8, 0.3, 0.0)) - Vec3(0.5, 0.5, 0.5)).norm() > 0.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 c = tex.color(Vec3(0.05 * i, -0.03 * i, 0.02 * i));
    for (int ch = 0; ch < 3; ++ch) {
      CHECK(c[ch] >= 0.0);
      CHECK(c[ch] <= 1.0);
    }
  }
}

TEST_CASE("normal perturbation preserves unit length and scales with sigma") {
  SceneSpec spec;
  spec.kind = SceneKind::textured_plane;
  spec.dims = Vec3(4, 6, 1);
  const TriangleMesh mesh = make_scene(spec);
  const View view = plane_view(32);
  const OracleRender r = raycast_render(mesh, view, spec.texture);
  const OracleRender same = perturb_normals(r, 0.0, 1);
  CHECK(same.normal.data == r.normal.data);

  const double sigma = 8.0;
  const OracleRender noisy = perturb_normals(r, sigma, 1);
  double sum_deg = 0;
  int count = 0;
  for (int y = 0; y < r.normal.height; ++y)
    for (int x = 0; x < r.normal.width; ++x) {
      Vec3 a(r.normal.at(y, x, 0), r.normal.at(y, x, 1), r.normal.at(y, x, 2));
      Vec3 b(noisy.normal.at(y, x, 0), noisy.normal.at(y, x, 1),
             noisy.normal.at(y, x, 2));
      if (a.norm() < 0.5) continue;
      CHECK(std::abs(b.norm() - 1.0) < 1e-9);
      sum_deg += std::acos(std::clamp(a.dot(b), -1.0, 1.0)) * 180.0 / M_PI;
      ++count;
    }
  REQUIRE(count > 100);
  // Folded-normal mean is sigma * sqrt(2/pi) = 0.798 * sigma.
  CHECK(sum_deg / count == doctest::Approx(sigma * 0.7979).epsilon(0.15));
}

TEST_CASE("normals from a constant depth map face the camera") {
  const View view = plane_view(16);
  ImageGrid depth(16, 16, 1, 3.0);
  const ImageGrid n = normals_from_depth(depth, view.intrinsics);
  for (int y = 1; y < 15; ++y)
    for (int x = 1; x < 15; ++x) {
      CHECK(n.at(y, x, 2) == doctest::Approx(-1.0).epsilon(1e-9));
    }
}

TEST_CASE("scene kinds round trip through their names") {
  for (auto k : {SceneKind::textured_plane, SceneKind::box_room,
                 SceneKind::sphere_room})
    CHECK(scene_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(scene_kind_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("scene validation rejects non-positive dimensions") {
  SceneSpec spec;
  spec.dims = Vec3(0, 1, 1);
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.dims = Vec3(1, 1, 1);
  spec.texture.frequency = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
