// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "surfrec/geometry.hpp"

namespace surfrec {

/// Flat elliptical Gaussian surfel. The disc normal is R(q) * (0,0,1);
/// `scale` spans the two tangential axes R(q) * e_x, R(q) * e_y.
struct Splat2D {
  Vec3 mu = Vec3::Zero();            // world position
  Eigen::Vector2d scale = {1e-2, 1e-2};  // scene units, > 0
  Quat q = Quat::Identity();         // world orientation
  double alpha = 0.8;                // opacity in [0,1]
  Vec3 color = Vec3::Zero();         // RGB in [0,1]

  void validate() const;
  Vec3 normal() const { return quat_to_normal(q); }
};

/// (view index, row-major pixel index) a splat was constructed from.
struct SplatProvenance {
  int view_index = -1;
  int pixel_index = -1;
};

struct SplatField {
  std::vector<Splat2D> splats;
  std::vector<SplatProvenance> provenance;  // empty, or aligned 1:1

  std::size_t size() const { return splats.size(); }
  void validate() const;
};

/// One surfel per valid pixel: center back-projected at the pixel's depth,
/// orientation from the camera-frame normal map rotated to world, isotropic
/// scale scale_mult * depth / fx, opacity alpha0, color from the view image.
/// Pixels with depth <= 0 or an unusable normal are skipped and counted.
std::vector<Splat2D> build_pixel_aligned(const ImageGrid& depth,
                                         const ImageGrid& normal_cam,
                                         const View& view, double alpha0,
                                         double scale_mult,
                                         std::vector<int>* pixel_indices = nullptr,
                                         int* skipped = nullptr);

/// Per-splat unit normals (third rotation column).
std::vector<Vec3> field_normals(const SplatField& field);

}  // namespace surfrec
