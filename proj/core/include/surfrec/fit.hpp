// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surfrec/cost_volume.hpp"
#include "surfrec/losses.hpp"
#include "surfrec/render.hpp"
#include "surfrec/splats.hpp"

namespace surfrec {

struct FitConfig {
  int steps = 500;
  // Per-class learning rates; lr_mu is additionally multiplied by the mean
  // splat depth so position steps track the scene scale.
  double lr_mu = 1e-4;
  double lr_scale = 5e-3;
  double lr_q = 1e-3;
  double lr_alpha = 5e-2;
  double lr_color = 1e-2;
  double lr_kappa = 1e-2;
  LossWeights weights;
  SamplingConfig sampling;
  std::uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  // Forward-pass settings (cost volume and splat construction).
  int depth_bins = 128;
  DepthSpacing spacing = DepthSpacing::inverse_depth;
  double alpha0 = 0.8;      // initial splat opacity
  double scale_mult = 1.0;  // splat radius in pixel footprints

  RenderConfig render{.margin_sigma = 5.0};  // speed/extent trade-off for fits
  bool held_out_photometric = false;
  void validate() const;
};

struct FitStep {
  double pho = 0;     // photometric term, averaged over supervised views
  double wcd = 0;     // weighted Chamfer between the per-view center clouds
  double normal = 0;  // multi-scale NLL term, averaged over views
  double total = 0;   // weighted sum
};

struct FitReport {
  std::vector<FitStep> trace;  // entry per step plus a final evaluation
  SplatField field;
  double wall_seconds = 0;
  bool degenerate_baseline = false;
};

/// Loss trace as CSV text: header plus one row per trace entry.
std::string loss_trace_csv(const FitReport& report);

/// Standard bias-corrected Adam update, step counter t starts at 1.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               std::vector<double>& m, std::vector<double>& v, double lr,
               double beta1, double beta2, double eps, int t);

/// Non-learned forward pass: features, plane-sweep cost volumes, coarse
/// depth + confidence per view, bilinear x4 depth upsampling, pixel-aligned
/// splats from both views concatenated (provenance view 0/1).
struct ForwardResult {
  SplatField field;
  ImageGrid coarse_depth1, coarse_depth2;  // quarter resolution
  ConfidenceMap confidence1, confidence2;  // quarter resolution
  ImageGrid depth_full1, depth_full2;      // upsampled to input resolution
  ImageGrid confidence_full1, confidence_full2;
  DepthCandidates candidates1, candidates2;
  bool degenerate_baseline = false;
};

ForwardResult forward_reconstruct(const View& view1, const View& view2,
                                  const ImageGrid& normals1,
                                  const ImageGrid& normals2,
                                  const FitConfig& cfg = {});

/// Optimizes an existing field against its supervising views with Adam under
/// the weighted photometric + WCD + normal objective. `pseudo_normals` are
/// camera-frame unit-normal maps per view (may be empty when w3 == 0);
/// `confidence_full` supplies WCD weights per view (empty = unit weights).
/// Throws if the total loss turns non-finite.
FitReport fit_field(SplatField field, const std::vector<View>& views,
                    const std::vector<ImageGrid>& pseudo_normals,
                    const std::vector<ImageGrid>& confidence_full,
                    const FitConfig& cfg, const View* held_out = nullptr);

/// forward_reconstruct followed by fit_field on the two input views.
FitReport fit_scene(const View& view1, const View& view2,
                    const ImageGrid& normals1, const ImageGrid& normals2,
                    const FitConfig& cfg, const View* held_out = nullptr);

}  // namespace surfrec
