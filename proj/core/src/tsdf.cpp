// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace surfrec {

void TsdfVolume::validate() const {
  if (!(voxel_size > 0)) {
    throw std::invalid_argument("TsdfVolume: voxel_size must be positive");
  }
  if (truncation < voxel_size) {
    throw std::invalid_argument("TsdfVolume: truncation below voxel_size");
  }
  const std::size_t n = static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  if (dims.minCoeff() <= 0 || tsdf.size() != n || weight.size() != n) {
    throw std::invalid_argument("TsdfVolume: dims/storage mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(tsdf[i] >= -1.0f && tsdf[i] <= 1.0f) || !(weight[i] >= 0.0f)) {
      throw std::invalid_argument("TsdfVolume: value out of range");
    }
  }
}

TsdfVolume make_volume(const Vec3& origin, const Eigen::Vector3i& dims,
                       double voxel_size, double truncation) {
  TsdfVolume vol;
  vol.origin = origin;
  vol.voxel_size = voxel_size;
  vol.truncation = truncation;
  vol.dims = dims;
  const std::size_t n = static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  vol.tsdf.assign(n, 1.0f);
  vol.weight.assign(n, 0.0f);
  vol.validate();
  return vol;
}

void TsdfConfig::validate() const {
  if (!(voxel_size > 0) || truncation < voxel_size) {
    throw std::invalid_argument("TsdfConfig: need truncation >= voxel_size > 0");
  }
  if (interpolated_poses < 0) {
    throw std::invalid_argument("TsdfConfig: negative pose count");
  }
  if (!(min_acc >= 0.0 && min_acc <= 1.0)) {
    throw std::invalid_argument("TsdfConfig: min_acc outside [0,1]");
  }
}

TsdfConfig TsdfConfig::preset(const std::string& name) {
  TsdfConfig cfg;
  if (name == "re10k") {
    cfg.voxel_size = 0.005;
    cfg.truncation = 0.1;
  } else if (name == "scannet") {
    cfg.voxel_size = 0.01;
    cfg.truncation = 0.08;
  } else {
    throw std::invalid_argument("TsdfConfig: unknown preset '" + name + "'");
  }
  return cfg;
}

void tsdf_integrate(TsdfVolume& vol, const ImageGrid& depth, const View& view,
                    const ImageGrid* valid) {
  view.validate();
  if (depth.channels != 1 || depth.height != view.intrinsics.height ||
      depth.width != view.intrinsics.width) {
    throw std::invalid_argument("tsdf_integrate: depth map shape mismatch");
  }
  if (valid && (valid->channels != 1 || valid->height != depth.height ||
                valid->width != depth.width)) {
    throw std::invalid_argument("tsdf_integrate: validity mask shape mismatch");
  }
  const CameraIntrinsics& intr = view.intrinsics;
  const Mat3 r = view.pose.rotation();
  const Vec3 t = view.pose.t;

  for (int z = 0; z < vol.dims.z(); ++z) {
    for (int y = 0; y < vol.dims.y(); ++y) {
      for (int x = 0; x < vol.dims.x(); ++x) {
        const Vec3 pc = r * vol.voxel_center(x, y, z) + t;
        if (pc.z() <= 1e-9) continue;
        const int xi =
            static_cast<int>(std::lround(intr.fx * pc.x() / pc.z() + intr.cx));
        const int yi =
            static_cast<int>(std::lround(intr.fy * pc.y() / pc.z() + intr.cy));
        if (xi < 0 || xi >= intr.width || yi < 0 || yi >= intr.height) continue;
        if (valid && valid->at(yi, xi) == 0.0) continue;
        const double dpix = depth.at(yi, xi);
        if (dpix <= 0.0) continue;
        const double sdf =
            std::clamp(dpix - pc.z(), -vol.truncation, vol.truncation) /
            vol.truncation;
        const std::size_t i = vol.index(x, y, z);
        const float w_old = vol.weight[i];
        vol.tsdf[i] = static_cast<float>(
            (static_cast<double>(vol.tsdf[i]) * w_old + sdf) / (w_old + 1.0f));
        vol.weight[i] = w_old + 1.0f;
      }
    }
  }
}

namespace {

const int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                 {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

bool point_in_frustum(const Vec3& p, const View& view) {
  const Vec3 pc = view.pose.to_camera(p);
  if (pc.z() < view.near || pc.z() > view.far) return false;
  const double px = view.intrinsics.fx * pc.x() / pc.z() + view.intrinsics.cx;
  const double py = view.intrinsics.fy * pc.y() / pc.z() + view.intrinsics.cy;
  return px >= -0.5 && px <= view.intrinsics.width - 0.5 && py >= -0.5 &&
         py <= view.intrinsics.height - 0.5;
}

bool in_any_frustum(const Vec3& p, const std::vector<View>& views) {
  for (const View& v : views) {
    if (point_in_frustum(p, v)) return true;
  }
  return false;
}

}  // namespace

TriangleMesh marching_cubes(const TsdfVolume& vol) {
  vol.validate();
  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  edge_vertex.reserve(1 << 16);

  const int nx = vol.dims.x(), ny = vol.dims.y(), nz = vol.dims.z();
  double value[8];
  int vid[12];
  for (int z = 0; z + 1 < nz; ++z) {
    for (int y = 0; y + 1 < ny; ++y) {
      for (int x = 0; x + 1 < nx; ++x) {
        bool usable = true;
        int cube_index = 0;
        for (int c = 0; c < 8; ++c) {
          const std::size_t i =
              vol.index(x + kCornerOffset[c][0], y + kCornerOffset[c][1],
                        z + kCornerOffset[c][2]);
          if (vol.weight[i] <= 0.0f) {
            usable = false;
            break;
          }
          value[c] = vol.tsdf[i];
          if (value[c] < 0.0) cube_index |= 1 << c;
        }
        if (!usable) continue;
        const int mask = detail::edge_mask(cube_index);
        if (mask == 0) continue;

        for (int e = 0; e < 12; ++e) {
          if (!(mask & (1 << e))) continue;
          const int ca = detail::kEdgeCorners[e][0];
          const int cb = detail::kEdgeCorners[e][1];
          const int ax[3] = {x + kCornerOffset[ca][0], y + kCornerOffset[ca][1],
                             z + kCornerOffset[ca][2]};
          const int bx[3] = {x + kCornerOffset[cb][0], y + kCornerOffset[cb][1],
                             z + kCornerOffset[cb][2]};
          int axis = 0;
          for (int k = 0; k < 3; ++k) {
            if (ax[k] != bx[k]) axis = k;
          }
          const int lx = std::min(ax[0], bx[0]);
          const int ly = std::min(ax[1], bx[1]);
          const int lz = std::min(ax[2], bx[2]);
          const std::uint64_t key = (static_cast<std::uint64_t>(axis) << 48) |
                                    (static_cast<std::uint64_t>(lz) << 32) |
                                    (static_cast<std::uint64_t>(ly) << 16) |
                                    static_cast<std::uint64_t>(lx);
          const auto it = edge_vertex.find(key);
          if (it != edge_vertex.end()) {
            vid[e] = it->second;
            continue;
          }
          const double va = value[ca], vb = value[cb];
          const double tt = va / (va - vb);
          const Vec3 pa = vol.voxel_center(ax[0], ax[1], ax[2]);
          const Vec3 pb = vol.voxel_center(bx[0], bx[1], bx[2]);
          vid[e] = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(pa + tt * (pb - pa));
          edge_vertex.emplace(key, vid[e]);
        }

        const signed char* tri = detail::kTriTable[cube_index];
        for (int k = 0; tri[k] != -1; k += 3) {
          const int a = vid[tri[k]], b = vid[tri[k + 1]], c = vid[tri[k + 2]];
          if (a == b || b == c || a == c) continue;
          const Vec3 cross = (mesh.vertices[b] - mesh.vertices[a])
                                 .cross(mesh.vertices[c] - mesh.vertices[a]);
          if (cross.squaredNorm() == 0.0) continue;
          mesh.faces.push_back({a, b, c});
        }
      }
    }
  }
  mesh.compact();
  return mesh;
}

TriangleMesh frustum_cull(const TriangleMesh& mesh,
                          const std::vector<View>& views) {
  if (views.empty()) {
    throw std::invalid_argument("frustum_cull: no views");
  }
  TriangleMesh out;
  out.vertices = mesh.vertices;
  out.vertex_normals = mesh.vertex_normals;
  for (const auto& f : mesh.faces) {
    const Vec3 centroid = (mesh.vertices[f[0]] + mesh.vertices[f[1]] +
                           mesh.vertices[f[2]]) /
                          3.0;
    if (in_any_frustum(centroid, views)) out.faces.push_back(f);
  }
  out.compact();
  return out;
}

PointCloud frustum_cull(const PointCloud& cloud,
                        const std::vector<View>& views) {
  if (views.empty()) {
    throw std::invalid_argument("frustum_cull: no views");
  }
  PointCloud out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!in_any_frustum(cloud.points[i], views)) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.has_weights()) out.weights.push_back(cloud.weights[i]);
  }
  return out;
}

CameraPose interpolate_pose(const CameraPose& a, const CameraPose& b,
                            double u) {
  CameraPose out;
  out.q = a.q.normalized().slerp(u, b.q.normalized());
  const Vec3 center = (1.0 - u) * a.camera_center() + u * b.camera_center();
  out.t = -(out.q.toRotationMatrix() * center);
  return out;
}

TriangleMesh extract_mesh(const SplatField& field,
                          const std::vector<View>& views,
                          const TsdfConfig& cfg,
                          const RenderConfig& render_cfg) {
  cfg.validate();
  field.validate();
  if (field.splats.empty()) {
    throw std::invalid_argument("extract_mesh: empty field");
  }
  if (views.empty()) {
    throw std::invalid_argument("extract_mesh: no views");
  }

  std::vector<View> fusion = views;
  if (views.size() >= 2) {
    for (int k = 1; k <= cfg.interpolated_poses; ++k) {
      const double u = static_cast<double>(k) / (cfg.interpolated_poses + 1);
      View v = views[0];
      v.pose = interpolate_pose(views[0].pose, views[1].pose, u);
      fusion.push_back(v);
    }
  }

  std::vector<ImageGrid> depths, masks;
  depths.reserve(fusion.size());
  masks.reserve(fusion.size());
  std::vector<double> support[3];
  for (const View& v : fusion) {
    const RenderOutput ro = render(field, v, render_cfg);
    ImageGrid mask(ro.depth.height, ro.depth.width, 1);
    const Mat3 r_c2w = v.pose.rotation().transpose();
    const Vec3 origin = v.pose.camera_center();
    for (int y = 0; y < ro.depth.height; ++y) {
      for (int x = 0; x < ro.depth.width; ++x) {
        const double d = ro.depth.at(y, x);
        if (ro.acc.at(y, x) < cfg.min_acc || d <= 0.0) continue;
        mask.at(y, x) = 1.0;
        if (d < v.near || d > 0.9 * v.far) continue;
        const Vec3 dir = r_c2w * Vec3((x - v.intrinsics.cx) / v.intrinsics.fx,
                                      (y - v.intrinsics.cy) / v.intrinsics.fy,
                                      1.0);
        const Vec3 p = origin + d * dir;
        for (int k = 0; k < 3; ++k) support[k].push_back(p[k]);
      }
    }
    depths.push_back(ro.depth);
    masks.push_back(std::move(mask));
  }
  if (support[0].empty()) return TriangleMesh{};

  // Volume bounds from the central 99% of the depth support per axis, so a
  // few mismatched-depth pixels cannot inflate the grid; points beyond the
  // bounds simply fall outside the volume during integration.
  Vec3 lo, hi;
  const std::size_t n_support = support[0].size();
  const std::size_t q_lo = static_cast<std::size_t>(0.005 * n_support);
  const std::size_t q_hi = n_support - 1 - q_lo;
  for (int k = 0; k < 3; ++k) {
    std::nth_element(support[k].begin(), support[k].begin() + q_lo,
                     support[k].end());
    lo[k] = support[k][q_lo];
    std::nth_element(support[k].begin(), support[k].begin() + q_hi,
                     support[k].end());
    hi[k] = support[k][q_hi];
  }

  const double pad = cfg.truncation + 4.0 * cfg.voxel_size;
  const Vec3 origin = lo.array() - pad;
  const Vec3 top = hi.array() + pad;
  Eigen::Vector3i dims;
  for (int k = 0; k < 3; ++k) {
    dims[k] =
        static_cast<int>(std::ceil((top[k] - origin[k]) / cfg.voxel_size)) + 1;
  }
  const std::size_t total =
      static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  if (total > 400000000ULL) {
    throw std::runtime_error("extract_mesh: TSDF volume too large (" +
                             std::to_string(total) + " voxels)");
  }

  TsdfVolume vol = make_volume(origin, dims, cfg.voxel_size, cfg.truncation);
  for (std::size_t i = 0; i < fusion.size(); ++i) {
    tsdf_integrate(vol, depths[i], fusion[i], &masks[i]);
  }
  return frustum_cull(marching_cubes(vol), views);
}

}  // namespace surfrec
