// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace surfrec {

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0))
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
  if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
    throw std::invalid_argument("intrinsics: principal point outside image");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("intrinsics: non-positive image size");
}

CameraIntrinsics CameraIntrinsics::downsampled(int factor) const {
  CameraIntrinsics out;
  const double off = (factor - 1) * 0.5;
  out.fx = fx / factor;
  out.fy = fy / factor;
  out.cx = (cx - off) / factor;
  out.cy = (cy - off) / factor;
  out.width = width / factor;
  out.height = height / factor;
  return out;
}

void CameraPose::validate() const {
  if (std::abs(q.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("pose: quaternion is not unit");
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 fwd = (target - eye).normalized();
  Vec3 right = fwd.cross(up);
  right = right.norm() < 1e-9 ? Vec3(1, 0, 0) : right.normalized();
  const Vec3 down = fwd.cross(right).normalized();
  Mat3 R;  // rows = camera axes expressed in world
  R.row(0) = right.transpose();
  R.row(1) = down.transpose();
  R.row(2) = fwd.transpose();
  CameraPose pose;
  pose.q = Quat(R).normalized();
  pose.t = -(R * eye);
  return pose;
}

void View::validate() const {
  intrinsics.validate();
  pose.validate();
  if (!(near > 0 && near < far))
    throw std::invalid_argument("view: requires 0 < near < far");
  if (image.height != intrinsics.height || image.width != intrinsics.width)
    throw std::invalid_argument("view: image size does not match intrinsics");
}

std::optional<std::pair<Vec2, double>> project_checked(const Vec3& point,
                                                       const CameraIntrinsics& intr,
                                                       const CameraPose& pose) {
  const Vec3 pc = pose.to_camera(point);
  if (!(pc.z() > 0)) return std::nullopt;
  const Vec2 px(intr.fx * pc.x() / pc.z() + intr.cx,
                intr.fy * pc.y() / pc.z() + intr.cy);
  return std::make_pair(px, pc.z());
}

std::pair<Vec2, double> project(const Vec3& point, const CameraIntrinsics& intr,
                                const CameraPose& pose) {
  auto r = project_checked(point, intr, pose);
  if (!r) throw std::domain_error("project: point behind camera");
  return *r;
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& intr,
               const CameraPose& pose) {
  if (!(depth > 0)) throw std::domain_error("unproject: non-positive depth");
  const Vec3 pc((pixel.x() - intr.cx) / intr.fx * depth,
                (pixel.y() - intr.cy) / intr.fy * depth, depth);
  return pose.to_world(pc);
}

Vec3 quat_to_normal(const Quat& q) {
  return q.normalized().toRotationMatrix().col(2);
}

Quat normal_to_quat(const Vec3& n) {
  if (std::abs(n.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("normal_to_quat: input is not unit");
  const Vec3 z(0, 0, 1);
  const double d = z.dot(n);
  if (d < -1.0 + 1e-12) {
    // Degenerate antipodal case, tie-break: 180 degrees about x.
    return Quat(0, 1, 0, 0);
  }
  // Shortest arc: q = normalize(1 + z.n, z x n).
  const Vec3 axis = z.cross(n);
  Quat q(1.0 + d, axis.x(), axis.y(), axis.z());
  q.normalize();
  return q;
}

WarpResult homography_warp(const ImageGrid& src, const View& view_src,
                           const View& view_dst, double depth) {
  const int H = view_dst.intrinsics.height;
  const int W = view_dst.intrinsics.width;
  WarpResult out;
  out.grid = ImageGrid(H, W, src.channels);
  out.valid.assign(static_cast<std::size_t>(H) * W, 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const Vec3 p = unproject(Vec2(x, y), depth, view_dst.intrinsics, view_dst.pose);
      const auto q = project_checked(p, view_src.intrinsics, view_src.pose);
      if (!q) continue;
      const double sx = q->first.x();
      const double sy = q->first.y();
      if (!bilinear_in_bounds(src, sx, sy)) continue;
      out.valid[static_cast<std::size_t>(y) * W + x] = 1;
      for (int c = 0; c < src.channels; ++c)
        out.grid.at(y, x, c) = bilinear_sample(src, sx, sy, c);
    }
  return out;
}

}  // namespace surfrec
