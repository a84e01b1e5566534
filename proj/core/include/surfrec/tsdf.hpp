// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "surfrec/mesh.hpp"
#include "surfrec/point_cloud.hpp"
#include "surfrec/render.hpp"

namespace surfrec {

/// Truncated signed distance volume; tsdf holds distances normalized by the
/// truncation band, so values live in [-1, 1].
struct TsdfVolume {
  Vec3 origin = Vec3::Zero();  // center of voxel (0,0,0)
  double voxel_size = 0;
  double truncation = 0;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  std::vector<float> tsdf;    // init 1 (free), size dims.prod()
  std::vector<float> weight;  // init 0

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims.y() + y) * dims.x() + x;
  }
  Vec3 voxel_center(int x, int y, int z) const {
    return origin + voxel_size * Vec3(x, y, z);
  }
  void validate() const;
};

TsdfVolume make_volume(const Vec3& origin, const Eigen::Vector3i& dims,
                       double voxel_size, double truncation);

/// Fusion settings. Presets mirror common dataset configurations:
/// "re10k" voxel 0.005 / truncation 0.1, "scannet" voxel 0.01 / 0.08.
struct TsdfConfig {
  double voxel_size = 0.01;
  double truncation = 0.08;
  int interpolated_poses = 6;  // slerp poses inserted between the two inputs
  double min_acc = 0.5;        // depth pixels below this opacity are skipped
  void validate() const;
  static TsdfConfig preset(const std::string& name);
};

/// Weighted running-average TSDF update from one depth map: every voxel that
/// projects in bounds with positive camera depth onto a valid pixel receives
/// (pixel depth - voxel depth) clamped to the truncation band, normalized,
/// with unit frame weight. `valid` (1ch, nonzero = usable) may be null.
void tsdf_integrate(TsdfVolume& vol, const ImageGrid& depth, const View& view,
                    const ImageGrid* valid = nullptr);

/// Standard 256-case marching cubes at iso level 0 with linear edge
/// interpolation. Cells touching any zero-weight corner are skipped. Shared
/// vertices are merged, so closed level sets yield watertight meshes.
/// Returns an empty mesh when no crossing exists.
TriangleMesh marching_cubes(const TsdfVolume& vol);

/// Keep faces whose centroid falls inside at least one view frustum
/// (depth within [near, far], pixel inside the image area).
TriangleMesh frustum_cull(const TriangleMesh& mesh,
                          const std::vector<View>& views);
PointCloud frustum_cull(const PointCloud& cloud, const std::vector<View>& views);

/// Full extraction: render depth/opacity from the input views plus
/// interpolated in-between poses, fuse into a volume sized to the observed
/// depth support, run marching cubes, cull against the input views.
TriangleMesh extract_mesh(const SplatField& field,
                          const std::vector<View>& views,
                          const TsdfConfig& cfg = {},
                          const RenderConfig& render_cfg = {});

/// Camera pose blending used for the in-between fusion poses: slerp on
/// rotation, linear interpolation of camera centers.
CameraPose interpolate_pose(const CameraPose& a, const CameraPose& b, double u);

namespace detail {
// Marching-cubes connectivity (corner pairs per edge) and the triangulation
// table; exposed for the table consistency tests.
extern const int kEdgeCorners[12][2];
extern const signed char kTriTable[256][16];
int edge_mask(int cube_index);
}  // namespace detail

}  // namespace surfrec
