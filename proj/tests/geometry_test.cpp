// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "surfrec/geometry.hpp"
#include "surfrec/rng.hpp"

using namespace surfrec;

namespace {

CameraIntrinsics test_intrinsics(int size = 128) {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 100.0;
  intr.cx = intr.cy = 64.0;
  intr.width = intr.height = size;
  return intr;
}

}  // namespace

TEST_CASE("project maps a known point to the expected pixel") {
  const auto intr = test_intrinsics();
  const auto [px, z] = project(Vec3(1, 0, 2), intr, CameraPose::identity());
  CHECK(px.x() == doctest::Approx(64.0 + 100.0 * 0.5).epsilon(1e-12));
  CHECK(px.y() == doctest::Approx(64.0).epsilon(1e-12));
  CHECK(z == doctest::Approx(2.0));
}

TEST_CASE("project throws at or behind the camera plane") {
  const auto intr = test_intrinsics();
  CHECK_THROWS_AS(project(Vec3(0, 0, 0), intr, CameraPose::identity()),
                  std::domain_error);
  CHECK_THROWS_AS(project(Vec3(0, 0, -1), intr, CameraPose::identity()),
                  std::domain_error);
  CHECK_FALSE(project_checked(Vec3(0, 0, -1), intr, CameraPose::identity())
                  .has_value());
}

TEST_CASE("unproject inverts project for random posed points") {
  const auto intr = test_intrinsics();
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t s = 11;
    const Vec3 eye(rng::uniform(s, i, 0) * 4 - 2, rng::uniform(s, i, 1) * 4 - 2,
                   rng::uniform(s, i, 2) * 4 - 2);
    const Vec3 target = eye + Vec3(rng::uniform(s, i, 3) - 0.5,
                                   rng::uniform(s, i, 4) - 0.5, 1.0);
    const CameraPose pose = CameraPose::look_at(eye, target);
    const Vec3 p = eye + (target - eye) * (1.0 + rng::uniform(s, i, 5));
    const auto [px, z] = project(p, intr, pose);
    const Vec3 back = unproject(px, z, intr, pose);
    CHECK((back - p).norm() < 1e-9);
  }
}

TEST_CASE("look_at places the target on the forward axis") {
  const Vec3 eye(0.3, -0.2, -3.0);
  const Vec3 target(0.1, 0.4, 1.0);
  const CameraPose pose = CameraPose::look_at(eye, target);
  CHECK((pose.camera_center() - eye).norm() < 1e-12);
  const Vec3 tc = pose.to_camera(target);
  CHECK(std::abs(tc.x()) < 1e-12);
  CHECK(std::abs(tc.y()) < 1e-12);
  CHECK(tc.z() == doctest::Approx((target - eye).norm()));
}

TEST_CASE("downsampled intrinsics keep pixel centers aligned") {
  auto intr = test_intrinsics();
  intr.cx = 63.5;
  intr.cy = 63.5;
  const auto q = intr.downsampled(4);
  CHECK(q.fx == doctest::Approx(25.0));
  CHECK(q.width == 32);
  // Full-res x for coarse pixel q is 4q + 1.5, so cx' solves 4*cx' + 1.5 = cx.
  CHECK(q.cx == doctest::Approx((63.5 - 1.5) / 4.0));
}

TEST_CASE("world-camera transforms are mutually inverse") {
  const CameraPose pose =
      CameraPose::look_at(Vec3(1, 2, -3), Vec3(0, 0.5, 2), Vec3(0.1, -1, 0));
  pose.validate();
  const Vec3 p(0.7, -1.3, 2.9);
  CHECK((pose.to_world(pose.to_camera(p)) - p).norm() < 1e-12);
  CHECK((pose.rotation() * pose.rotation().transpose() - Mat3::Identity())
            .norm() < 1e-12);
}

TEST_CASE("quat_to_normal of identity is +z") {
  CHECK((quat_to_normal(Quat::Identity()) - Vec3(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("normal_to_quat round-trips random unit normals") {
  for (int i = 0; i < 200; ++i) {
    Vec3 n(rng::normal(21, i, 0), rng::normal(21, i, 1), rng::normal(21, i, 2));
    if (n.norm() < 1e-3) continue;
    n.normalize();
    const Quat q = normal_to_quat(n);
    CHECK(std::abs(q.norm() - 1.0) < 1e-12);
    CHECK((quat_to_normal(q) - n).norm() < 1e-9);
  }
  // The antipode has no unique minimal rotation; it must still map exactly.
  CHECK((quat_to_normal(normal_to_quat(Vec3(0, 0, -1))) - Vec3(0, 0, -1))
            .norm() < 1e-12);
}

TEST_CASE("homography_warp between identical views is the identity") {
  const int size = 32;
  CameraIntrinsics intr;
  intr.fx = intr.fy = 40;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  View v{ImageGrid(size, size, 1), intr, CameraPose::identity(), 0.5, 10.0};
  ImageGrid src(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) src.at(y, x) = rng::uniform(3, y, x);
  for (double depth : {0.7, 2.0, 9.0}) {
    const WarpResult w = homography_warp(src, v, v, depth);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        CHECK(w.valid[static_cast<std::size_t>(y) * size + x] == 1);
        CHECK(w.grid.at(y, x) == doctest::Approx(src.at(y, x)).epsilon(1e-12));
      }
  }
}

TEST_CASE("homography_warp shifts a laterally translated view by b*fx/d") {
  const int size = 64;
  CameraIntrinsics intr;
  intr.fx = intr.fy = 80;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  const double baseline = 0.5;
  const double depth = 4.0;  // disparity = 0.5 * 80 / 4 = 10 px exactly
  View dst{ImageGrid(size, size, 1), intr, CameraPose::identity(), 0.5, 10.0};
  View src{ImageGrid(size, size, 1), intr,
           CameraPose::look_at(Vec3(baseline, 0, 0), Vec3(baseline, 0, 1)),
           0.5, 10.0};
  ImageGrid img(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(y, x) = rng::uniform(5, y, x);
  const WarpResult w = homography_warp(img, src, dst, depth);
  const int disp = 10;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int xs = x - disp;
      if (xs < 0 || xs >= size) {
        CHECK(w.valid[static_cast<std::size_t>(y) * size + x] == 0);
      } else {
        REQUIRE(w.valid[static_cast<std::size_t>(y) * size + x] == 1);
        CHECK(w.grid.at(y, x) == doctest::Approx(img.at(y, xs)).epsilon(1e-9));
      }
    }
}

TEST_CASE("view validation rejects bad depth ranges and image mismatch") {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 10;
  intr.cx = intr.cy = 3.5;
  intr.width = intr.height = 8;
  View v{ImageGrid(8, 8, 3), intr, CameraPose::identity(), 1.0, 10.0};
  CHECK_NOTHROW(v.validate());
  View bad = v;
  bad.near = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = v;
  bad.far = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = v;
  bad.image = ImageGrid(4, 8, 3);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
