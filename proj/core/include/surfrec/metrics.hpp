// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "surfrec/mesh.hpp"
#include "surfrec/point_cloud.hpp"

namespace surfrec {

struct MeshMetrics {
  double cd = 0;         // symmetric mean nearest-neighbor distance
  double precision = 0;  // fraction of pred points within tau of gt
  double recall = 0;     // fraction of gt points within tau of pred
  double f1 = 0;         // harmonic mean, 0 when p + r == 0
  double tau = 0;
  std::size_t samples = 0;
};

struct DepthMetrics {
  double abs_rel = 0;   // mean |pred-gt| / gt over the mask
  double abs_diff = 0;  // mean |pred-gt| over the mask
};

struct NormalMetrics {
  double mean_deg = 0;    // mean angular error in degrees
  double frac_lt30 = 0;   // fraction of masked pixels with error < 30 degrees
};

/// n area-weighted uniform surface samples, deterministic given seed.
/// Throws on an empty mesh or n < 1.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n,
                       std::uint64_t seed);

/// Point-cloud reconstruction metrics at threshold tau ("within" inclusive).
MeshMetrics mesh_metrics(const PointCloud& pred, const PointCloud& gt,
                         double tau = 0.05);

/// Depth errors over nonzero-mask pixels; gt must be positive there.
DepthMetrics depth_metrics(const ImageGrid& pred, const ImageGrid& gt,
                           const ImageGrid& mask);

/// Angular errors between unit-normal maps over nonzero-mask pixels.
NormalMetrics normal_metrics(const ImageGrid& pred, const ImageGrid& gt,
                             const ImageGrid& mask);

}  // namespace surfrec
