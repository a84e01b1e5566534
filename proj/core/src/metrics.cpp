// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "surfrec/kdtree.hpp"
#include "surfrec/rng.hpp"

namespace surfrec {

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n,
                       std::uint64_t seed) {
  mesh.validate();
  if (mesh.faces.empty()) {
    throw std::invalid_argument("sample_mesh: empty mesh");
  }
  if (n < 1) {
    throw std::invalid_argument("sample_mesh: need at least one sample");
  }

  std::vector<double> cdf(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(static_cast<int>(f));
    cdf[f] = total;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("sample_mesh: zero total area");
  }

  PointCloud out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng::uniform(seed, 0x6d657368ULL, i, 0) * total;
    const std::size_t f =
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    const auto& face = mesh.faces[std::min(f, mesh.faces.size() - 1)];
    const double r1 = rng::uniform(seed, 0x6d657368ULL, i, 1);
    const double r2 = rng::uniform(seed, 0x6d657368ULL, i, 2);
    const double s = std::sqrt(r1);
    const Vec3 p = (1.0 - s) * mesh.vertices[face[0]] +
                   s * (1.0 - r2) * mesh.vertices[face[1]] +
                   s * r2 * mesh.vertices[face[2]];
    out.points.push_back(p);
  }
  return out;
}

MeshMetrics mesh_metrics(const PointCloud& pred, const PointCloud& gt,
                         double tau) {
  pred.validate();
  gt.validate();
  if (pred.points.empty() || gt.points.empty()) {
    throw std::invalid_argument("mesh_metrics: empty cloud");
  }
  if (!(tau > 0.0)) {
    throw std::invalid_argument("mesh_metrics: tau must be positive");
  }

  const KdTree3 tree_gt(gt.points);
  const KdTree3 tree_pred(pred.points);

  double sum_pred = 0.0;
  std::size_t hit_pred = 0;
  for (const Vec3& p : pred.points) {
    const double d = std::sqrt(tree_gt.nearest(p).d2);
    sum_pred += d;
    if (d <= tau) ++hit_pred;
  }
  double sum_gt = 0.0;
  std::size_t hit_gt = 0;
  for (const Vec3& p : gt.points) {
    const double d = std::sqrt(tree_pred.nearest(p).d2);
    sum_gt += d;
    if (d <= tau) ++hit_gt;
  }

  MeshMetrics m;
  m.tau = tau;
  m.samples = pred.points.size() + gt.points.size();
  m.cd = 0.5 * (sum_pred / pred.points.size() + sum_gt / gt.points.size());
  m.precision = static_cast<double>(hit_pred) / pred.points.size();
  m.recall = static_cast<double>(hit_gt) / gt.points.size();
  m.f1 = (m.precision + m.recall > 0.0)
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

DepthMetrics depth_metrics(const ImageGrid& pred, const ImageGrid& gt,
                           const ImageGrid& mask) {
  if (pred.channels != 1 || !pred.same_shape(gt) || mask.channels != 1 ||
      mask.height != pred.height || mask.width != pred.width) {
    throw std::invalid_argument("depth_metrics: shape mismatch");
  }
  double rel = 0.0, diff = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
    if (mask.data[i] == 0.0) continue;
    if (!(gt.data[i] > 0.0)) {
      throw std::invalid_argument("depth_metrics: non-positive GT on mask");
    }
    const double d = std::abs(pred.data[i] - gt.data[i]);
    rel += d / gt.data[i];
    diff += d;
    ++count;
  }
  if (count == 0) {
    throw std::invalid_argument("depth_metrics: empty mask");
  }
  return {rel / count, diff / count};
}

NormalMetrics normal_metrics(const ImageGrid& pred, const ImageGrid& gt,
                             const ImageGrid& mask) {
  if (pred.channels != 3 || !pred.same_shape(gt) || mask.channels != 1 ||
      mask.height != pred.height || mask.width != pred.width) {
    throw std::invalid_argument("normal_metrics: shape mismatch");
  }
  double sum_deg = 0.0;
  std::size_t below = 0, count = 0;
  for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
    if (mask.data[i] == 0.0) continue;
    double dot = 0.0;
    for (int c = 0; c < 3; ++c) dot += pred.data[3 * i + c] * gt.data[3 * i + c];
    const double deg =
        std::acos(std::clamp(dot, -1.0, 1.0)) * 180.0 / M_PI;
    sum_deg += deg;
    if (deg < 30.0) ++below;
    ++count;
  }
  if (count == 0) {
    throw std::invalid_argument("normal_metrics: empty mask");
  }
  return {sum_deg / count, static_cast<double>(below) / count};
}

}  // namespace surfrec
