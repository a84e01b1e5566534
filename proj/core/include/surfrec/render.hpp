// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "surfrec/splats.hpp"

namespace surfrec {

struct RenderConfig {
  double weight_clip = 0.999;    // upper clip on per-splat blend weight
  double margin_sigma = 7.0;     // tangential extent used for culling/binning
  double acc_floor = 1e-4;       // denominator floor for depth/normal maps
  int tile_size = 16;
  bool median_depth = false;     // expected depth by default
};

struct RenderOutput {
  ImageGrid rgb;     // 3ch, front-to-back alpha blend
  ImageGrid depth;   // 1ch, acc-normalized expected depth (camera z)
  ImageGrid normal;  // 3ch, acc-normalized blended normals, camera frame
  ImageGrid acc;     // 1ch, accumulated opacity in [0,1]
};

/// Per-splat partials of a scalar loss. Zero for splats that never blended.
struct RenderGradients {
  std::vector<Vec3> mu;
  std::vector<Eigen::Vector2d> scale;
  std::vector<Eigen::Vector4d> q;  // (w,x,y,z), chained through normalization
  std::vector<double> alpha;
  std::vector<Vec3> color;
};

/// Per-pixel loss gradients on the forward outputs. Empty grids mean zero.
struct RenderUpstream {
  ImageGrid rgb;
  ImageGrid depth;
  ImageGrid normal;
  ImageGrid acc;
};

/// Frustum culling + global front-to-back order (center depth, index
/// tie-break) + per-tile candidate lists referencing that order.
struct CullResult {
  std::vector<int> order;                  // surviving splat ids, sorted
  std::vector<double> depths;              // camera z per entry of `order`
  std::vector<std::vector<int>> tiles;     // per tile: positions into `order`
  int tiles_x = 0, tiles_y = 0;
};

CullResult cull_and_sort(const SplatField& field, const View& view,
                         const RenderConfig& cfg = {});

/// Exact per-pixel ray/splat-plane intersection, Gaussian weight in the
/// splat's scaled tangent frame, front-to-back blending in global center
/// depth order. Deterministic; no stochastic elements.
RenderOutput render(const SplatField& field, const View& view,
                    const RenderConfig& cfg = {});

/// Analytic adjoint of render() for the expected-depth mode: exact
/// chain-rule gradients through intersection, Gaussian weight, blending and
/// the acc normalization. Throws if cfg.median_depth is set.
RenderGradients render_backward(const SplatField& field, const View& view,
                                const RenderConfig& cfg,
                                const RenderUpstream& upstream);

}  // namespace surfrec
