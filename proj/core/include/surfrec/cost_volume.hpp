// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "surfrec/features.hpp"
#include "surfrec/geometry.hpp"
#include "surfrec/point_cloud.hpp"

namespace surfrec {

enum class DepthSpacing { inverse_depth, linear };

/// Strictly increasing depth hypotheses in [near, far], endpoints included.
struct DepthCandidates {
  std::vector<double> values;

  int count() const { return static_cast<int>(values.size()); }
  void validate() const;
  /// Gap between the two candidates bracketing `depth` (clamped at the ends).
  double local_spacing(double depth) const;
};

/// Inverse-depth spacing is uniform in 1/d (default for wide ranges),
/// linear is uniform in d. Throws on an invalid range or D < 2.
DepthCandidates make_candidates(double near, double far, int D,
                                DepthSpacing spacing = DepthSpacing::inverse_depth);

/// Matching score per (pixel, depth hypothesis), at feature resolution.
struct CostVolume {
  ImageGrid logits;  // channels == candidates.count()
  DepthCandidates candidates;
};

/// Per-pixel max of the depth softmax, in (0,1].
struct ConfidenceMap {
  ImageGrid grid;  // 1 channel
};

inline constexpr double kInvalidWarpLogit = -10.0;

/// Plane-sweep correlation volume: for each candidate depth, warp the other
/// view's features into this view and take the channel dot product divided by
/// sqrt(C). Invalid warps contribute the sentinel logit; a 3x3 box filter
/// stands in for the cost-volume convolution stage.
CostVolume build_cost_volume(const FeatureMap& features_i, const FeatureMap& features_j,
                             const View& view_i, const View& view_j,
                             const DepthCandidates& candidates);

/// Softmax-weighted sum of candidate depths per pixel (1-channel map).
ImageGrid softmax_depth(const CostVolume& vol);

/// Max softmax weight per pixel.
ConfidenceMap confidence_map(const CostVolume& vol);

/// One world point per pixel with depth > 0, row-major order preserved so
/// per-pixel weights align by index. Also returns the source pixel indices.
PointCloud backproject_depth(const ImageGrid& depth, const CameraIntrinsics& intr,
                             const CameraPose& pose,
                             std::vector<int>* pixel_indices = nullptr);

}  // namespace surfrec
