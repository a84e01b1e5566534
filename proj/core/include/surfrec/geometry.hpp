// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "surfrec/image.hpp"

namespace surfrec {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;  // stored (w,x,y,z)

/// Pinhole intrinsics in pixels. Pixel (0,0) top-left, centers at integers.
struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;
  /// Intrinsics of the image area-downsampled by `factor`
  /// (pixel center alignment: full x = factor*q + (factor-1)/2).
  CameraIntrinsics downsampled(int factor) const;
};

/// World-to-camera rigid transform: p_cam = R(q) * p_world + t.
/// Right-handed, +z forward, +x right, +y down.
struct CameraPose {
  Quat q = Quat::Identity();
  Vec3 t = Vec3::Zero();

  Mat3 rotation() const { return q.normalized().toRotationMatrix(); }
  Vec3 camera_center() const { return -(rotation().transpose() * t); }
  Vec3 to_camera(const Vec3& p_world) const { return rotation() * p_world + t; }
  Vec3 to_world(const Vec3& p_cam) const {
    return rotation().transpose() * (p_cam - t);
  }
  void validate() const;  // unit quaternion within 1e-9

  static CameraPose identity() { return CameraPose{}; }
  /// Pose looking from `eye` toward `target`; `up` resolves the roll.
  static CameraPose look_at(const Vec3& eye, const Vec3& target,
                            const Vec3& up = Vec3(0, -1, 0));
};

/// One posed input image with its depth range.
struct View {
  ImageGrid image;  // 3 color channels in [0,1] (feature views may differ)
  CameraIntrinsics intrinsics;
  CameraPose pose;
  double near = 0, far = 0;

  void validate() const;  // 0 < near < far plus member invariants
};

// -- Projection --------------------------------------------------------------

/// Perspective projection; returns (pixel, camera-space z).
/// Throws std::domain_error when the point is at or behind the camera plane.
std::pair<Vec2, double> project(const Vec3& point, const CameraIntrinsics& intr,
                                const CameraPose& pose);

/// Non-throwing variant; nullopt when z <= 0.
std::optional<std::pair<Vec2, double>> project_checked(
    const Vec3& point, const CameraIntrinsics& intr, const CameraPose& pose);

/// Inverse of project for depth > 0; throws std::domain_error otherwise.
Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& intr,
               const CameraPose& pose);

// -- Quaternion <-> normal (splat orientation) -------------------------------

/// Third column of R(q): the direction a z-aligned disc normal is rotated to.
Vec3 quat_to_normal(const Quat& q);

/// Minimal rotation taking (0,0,1) to n, with the antipode n=(0,0,-1)
/// resolved as a 180-degree rotation about x. Requires |n| = 1 within 1e-6.
Quat normal_to_quat(const Vec3& n);

// -- Plane-induced warping ---------------------------------------------------

struct WarpResult {
  ImageGrid grid;               // same channels as src, zero where invalid
  std::vector<std::uint8_t> valid;  // per destination pixel
};

/// Warp `src` (living in view_src's image plane) into view_dst's image plane
/// through the fronto-parallel plane at `depth` in view_dst's camera.
/// Bilinear sampling; out-of-bounds or behind-camera samples are zero-filled
/// and cleared in the validity mask.
WarpResult homography_warp(const ImageGrid& src, const View& view_src,
                           const View& view_dst, double depth);

}  // namespace surfrec
