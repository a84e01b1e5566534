// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/splats.hpp"

#include <cmath>
#include <stdexcept>

namespace surfrec {

void Splat2D::validate() const {
  if (!(scale.x() > 0 && scale.y() > 0))
    throw std::invalid_argument("splat: non-positive scale");
  if (!(alpha >= 0 && alpha <= 1))
    throw std::invalid_argument("splat: opacity outside [0,1]");
  if (!(q.norm() > 1e-12) || !q.coeffs().allFinite())
    throw std::invalid_argument("splat: degenerate quaternion");
  if (!mu.allFinite() || !color.allFinite())
    throw std::invalid_argument("splat: non-finite values");
}

void SplatField::validate() const {
  if (!provenance.empty() && provenance.size() != splats.size())
    throw std::invalid_argument("field: provenance misaligned");
  for (const auto& s : splats) s.validate();
}

std::vector<Splat2D> build_pixel_aligned(const ImageGrid& depth,
                                         const ImageGrid& normal_cam,
                                         const View& view, double alpha0,
                                         double scale_mult,
                                         std::vector<int>* pixel_indices,
                                         int* skipped) {
  if (depth.channels != 1 || normal_cam.channels != 3)
    throw std::invalid_argument("build_pixel_aligned: bad channel counts");
  if (depth.height != normal_cam.height || depth.width != normal_cam.width)
    throw std::invalid_argument("build_pixel_aligned: depth/normal size mismatch");
  if (depth.height != view.intrinsics.height || depth.width != view.intrinsics.width)
    throw std::invalid_argument("build_pixel_aligned: maps do not match view size");

  const Mat3 Rt = view.pose.rotation().transpose();
  std::vector<Splat2D> out;
  out.reserve(depth.pixel_count());
  if (pixel_indices) pixel_indices->clear();
  int skip_count = 0;
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const double d = depth.at(y, x);
      Vec3 n(normal_cam.at(y, x, 0), normal_cam.at(y, x, 1), normal_cam.at(y, x, 2));
      const double nl = n.norm();
      if (!(d > 0) || nl < 0.5) {
        ++skip_count;
        continue;
      }
      n /= nl;
      Splat2D s;
      s.mu = unproject(Vec2(x, y), d, view.intrinsics, view.pose);
      s.q = normal_to_quat((Rt * n).normalized());
      const double footprint = scale_mult * d / view.intrinsics.fx;
      s.scale = {footprint, footprint};
      s.alpha = alpha0;
      s.color = Vec3(view.image.at(y, x, 0), view.image.at(y, x, 1), view.image.at(y, x, 2));
      out.push_back(s);
      if (pixel_indices) pixel_indices->push_back(y * depth.width + x);
    }
  if (skipped) *skipped = skip_count;
  return out;
}

std::vector<Vec3> field_normals(const SplatField& field) {
  std::vector<Vec3> out;
  out.reserve(field.size());
  for (const auto& s : field.splats) out.push_back(quat_to_normal(s.q));
  return out;
}

}  // namespace surfrec
