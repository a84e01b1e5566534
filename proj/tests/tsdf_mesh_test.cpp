// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "surfrec/tsdf.hpp"

using namespace surfrec;

namespace {

/// Fills the volume with an analytic signed distance, full weight.
template <typename F>
void fill_sdf(TsdfVolume& vol, F sdf) {
  for (int z = 0; z < vol.dims.z(); ++z)
    for (int y = 0; y < vol.dims.y(); ++y)
      for (int x = 0; x < vol.dims.x(); ++x) {
        const double d = sdf(vol.voxel_center(x, y, z));
        vol.tsdf[vol.index(x, y, z)] = static_cast<float>(
            std::clamp(d / vol.truncation, -1.0, 1.0));
        vol.weight[vol.index(x, y, z)] = 1.0f;
      }
}

/// Counts boundary edges; zero for a closed surface. Also reports Euler
/// characteristic V - E + F.
struct Closure {
  bool closed = true;
  long euler = 0;
};

Closure surface_closure(const TriangleMesh& m) {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& f : m.faces)
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  Closure c;
  for (const auto& [k, count] : edges)
    if (count != 2) c.closed = false;
  c.euler = static_cast<long>(m.vertices.size()) -
            static_cast<long>(edges.size()) +
            static_cast<long>(m.faces.size());
  return c;
}

}  // namespace

TEST_CASE("volumes initialize to free space with zero weight") {
  const TsdfVolume vol =
      make_volume(Vec3(0, 0, 0), Eigen::Vector3i(4, 5, 6), 0.1, 0.3);
  CHECK(vol.tsdf.size() == 4u * 5u * 6u);
  for (float v : vol.tsdf) CHECK(v == 1.0f);
  for (float w : vol.weight) CHECK(w == 0.0f);
  CHECK(vol.index(1, 2, 3) == (3u * 5u + 2u) * 4u + 1u);
  CHECK((vol.voxel_center(1, 2, 3) - Vec3(0.1, 0.2, 0.3)).norm() < 1e-12);
  CHECK_THROWS_AS(make_volume(Vec3(0, 0, 0), Eigen::Vector3i(0, 5, 6), 0.1, 0.3),
                  std::invalid_argument);
}

TEST_CASE("marching cubes reproduces a plane from a linear field exactly") {
  TsdfVolume vol =
      make_volume(Vec3(0, 0, 0), Eigen::Vector3i(8, 8, 8), 0.25, 1.0);
  const double plane_z = 0.875;  // between voxel layers 3 and 4
  fill_sdf(vol, [&](const Vec3& p) { return p.z() - plane_z; });
  const TriangleMesh m = marching_cubes(vol);
  REQUIRE(!m.empty());
  for (const Vec3& v : m.vertices)
    CHECK(std::abs(v.z() - plane_z) < 1e-12);
}

TEST_CASE("marching cubes on a sphere field is closed and accurate") {
  const double radius = 0.5;
  const double voxel = 0.04;
  const int n = 32;
  TsdfVolume vol = make_volume(Vec3(-0.62, -0.62, -0.62),
                               Eigen::Vector3i(n, n, n), voxel, 0.12);
  fill_sdf(vol, [&](const Vec3& p) { return p.norm() - radius; });
  const TriangleMesh m = marching_cubes(vol);
  REQUIRE(!m.empty());
  const Closure c = surface_closure(m);
  CHECK(c.closed);
  CHECK(c.euler == 2);
  for (const Vec3& v : m.vertices)
    CHECK(std::abs(v.norm() - radius) <= voxel / 2);
}

TEST_CASE("cells touching zero-weight corners are skipped") {
  TsdfVolume vol =
      make_volume(Vec3(0, 0, 0), Eigen::Vector3i(4, 4, 4), 0.5, 1.0);
  fill_sdf(vol, [&](const Vec3& p) { return p.z() - 0.75; });
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) vol.weight[vol.index(x, y, 1)] = 0.0f;
  const TriangleMesh m = marching_cubes(vol);
  CHECK(m.empty());
}

TEST_CASE("marching cubes tables stay consistent with the edge mask") {
  for (int ci = 0; ci < 256; ++ci) {
    const int mask = detail::edge_mask(ci);
    for (int k = 0; detail::kTriTable[ci][k] != -1; ++k) {
      const int e = detail::kTriTable[ci][k];
      REQUIRE(e >= 0);
      REQUIRE(e < 12);
      CHECK((mask >> e) & 1);
    }
    for (int e = 0; e < 12; ++e) {
      const int a = detail::kEdgeCorners[e][0], b = detail::kEdgeCorners[e][1];
      // An edge crosses iff its corners sit on opposite sides.
      const bool crosses = (((ci >> a) & 1) != ((ci >> b) & 1));
      CHECK(((mask >> e) & 1) == (crosses ? 1 : 0));
    }
  }
}

TEST_CASE("depth integration carves the expected signed distances") {
  const int size = 16;
  CameraIntrinsics intr;
  intr.fx = intr.fy = 16;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  View view{ImageGrid(size, size, 3), intr, CameraPose::identity(), 0.1, 10.0};
  ImageGrid depth(size, size, 1, 2.0);  // fronto-parallel wall at z = 2

  TsdfVolume vol =
      make_volume(Vec3(-0.2, -0.2, 1.8), Eigen::Vector3i(5, 5, 5), 0.1, 0.2);
  tsdf_integrate(vol, depth, view);
  // Central column: voxel z = 1.8 is 0.2 in front of the wall (tsdf +1),
  // z = 2.0 on it (0), z = 2.2 behind (-1).
  CHECK(vol.weight[vol.index(2, 2, 0)] == 1.0f);
  CHECK(vol.tsdf[vol.index(2, 2, 0)] == doctest::Approx(1.0));
  CHECK(std::abs(vol.tsdf[vol.index(2, 2, 2)]) < 1e-6);
  CHECK(vol.tsdf[vol.index(2, 2, 4)] == doctest::Approx(-1.0));
  // A second identical integration leaves the average unchanged.
  TsdfVolume twice = vol;
  tsdf_integrate(twice, depth, view);
  CHECK(twice.tsdf[vol.index(2, 2, 2)] ==
        doctest::Approx(vol.tsdf[vol.index(2, 2, 2)]));
  CHECK(twice.weight[vol.index(2, 2, 2)] == 2.0f);
}

TEST_CASE("frustum culling keeps only geometry seen by some view") {
  const int size = 16;
  CameraIntrinsics intr;
  intr.fx = intr.fy = 16;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  View view{ImageGrid(size, size, 3), intr, CameraPose::identity(), 1.0, 5.0};

  PointCloud cloud;
  cloud.points = {Vec3(0, 0, 2), Vec3(0, 0, 8), Vec3(0, 0, -1),
                  Vec3(10, 0, 2)};
  const PointCloud kept = frustum_cull(cloud, {view});
  REQUIRE(kept.size() == 1);
  CHECK((kept.points[0] - Vec3(0, 0, 2)).norm() == 0.0);

  TriangleMesh m;
  m.vertices = {Vec3(-0.1, -0.1, 2), Vec3(0.1, -0.1, 2), Vec3(0, 0.1, 2),
                Vec3(-0.1, -0.1, 8), Vec3(0.1, -0.1, 8), Vec3(0, 0.1, 8)};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  const TriangleMesh culled = frustum_cull(m, {view});
  REQUIRE(culled.faces.size() == 1);
}

TEST_CASE("pose interpolation blends rotation and camera center") {
  const CameraPose a = CameraPose::look_at(Vec3(0, 0, -3), Vec3(0, 0, 0));
  const CameraPose b = CameraPose::look_at(Vec3(1, 0, -3), Vec3(1, 0, 0));
  CHECK((interpolate_pose(a, b, 0.0).t - a.t).norm() < 1e-12);
  CHECK((interpolate_pose(a, b, 1.0).t - b.t).norm() < 1e-12);
  const CameraPose mid = interpolate_pose(a, b, 0.5);
  CHECK((mid.camera_center() - Vec3(0.5, 0, -3)).norm() < 1e-9);
}

TEST_CASE("tsdf config presets carry the dataset defaults") {
  const TsdfConfig re = TsdfConfig::preset("re10k");
  CHECK(re.voxel_size == doctest::Approx(0.005));
  CHECK(re.truncation == doctest::Approx(0.1));
  const TsdfConfig sc = TsdfConfig::preset("scannet");
  CHECK(sc.voxel_size == doctest::Approx(0.01));
  CHECK(sc.truncation == doctest::Approx(0.08));
  CHECK_THROWS_AS(TsdfConfig::preset("nope"), std::invalid_argument);
}
