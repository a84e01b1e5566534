// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "surfrec/image.hpp"
#include "surfrec/point_cloud.hpp"

namespace surfrec {

// -- Chamfer ------------------------------------------------------------------

struct ChamferResult {
  double value = 0;
  std::vector<Vec3> grad_a;  // d value / d a.points[i]
  std::vector<Vec3> grad_b;
};

/// Symmetric mean nearest-neighbor Euclidean distance,
/// L = 0.5 * (mean_i min_j |a_i - b_j| + mean_j min_i |b_j - a_i|).
/// Gradients flow to both the query point and its matched neighbor; the
/// subgradient at coincident points is zero. Throws on empty clouds.
ChamferResult chamfer(const PointCloud& a, const PointCloud& b);

/// Chamfer with per-point confidence weights and raw-count normalization,
/// L = 0.5 * (1/Na * sum_i w_i |a_i - b_nn| + 1/Nb * sum_j w_j |b_j - a_nn|).
/// Weights are inputs only; no gradient is produced for them.
/// Throws on empty clouds or missing weights.
ChamferResult weighted_chamfer(const PointCloud& a, const PointCloud& b);

// -- Directional NLL ----------------------------------------------------------

struct AngMfResult {
  double value = 0;
  Vec3 grad_n = Vec3::Zero();  // tangential (perpendicular to n)
  double grad_kappa = 0;
};

/// Negative log-likelihood of the angular von Mises-Fisher density,
/// L = -log(kappa^2+1) + log(1+exp(-kappa*pi)) + kappa*arccos(n.n_hat).
/// The value uses the exact angle; the n-gradient evaluates the arccos
/// derivative at a dot product clamped away from +-1 so it stays bounded.
/// Throws on kappa <= 0.
AngMfResult angmf_nll(const Vec3& n, double kappa, const Vec3& n_hat);

// -- Uncertainty-guided pixel sampling ----------------------------------------

struct SamplingConfig {
  double beta = 0.7;      // fraction taken from the lowest-kappa pixels
  double fraction = 0.4;  // sampled share of the pixel count
  /// Budget for a grid with `pixels` pixels: round(fraction*pixels),
  /// clamped to [1, pixels].
  int budget(std::size_t pixels) const;
  void validate() const;
};

/// Deterministic pixel selection: the floor(beta*n) lowest-kappa pixels
/// (ties by index), plus uniformly random distinct pixels from the remainder
/// to reach exactly n. Returned indices are row-major and sorted.
std::vector<int> uncertainty_sample(const ImageGrid& kappa_map, int n,
                                    double beta, std::uint64_t seed);

// -- Multi-scale normal loss --------------------------------------------------

struct NormalScale {
  ImageGrid normal;  // 3ch, near-unit vectors
  ImageGrid kappa;   // 1ch, > 0
};

struct NormalPrediction {
  std::vector<NormalScale> scales;  // coarse to fine
  void validate() const;
};

struct NormalLossResult {
  double value = 0;
  std::vector<ImageGrid> grad_normal;  // per scale, 3ch; zero off-sample
  std::vector<ImageGrid> grad_kappa;   // per scale, 1ch
};

/// Mean over scales of the mean angmf_nll over an uncertainty_sample'd pixel
/// set. `pseudo_gt` holds one unit-normal map per scale. Pixels whose mask
/// entry is zero are skipped (the per-scale mean runs over surviving
/// samples); pass empty masks to use every sampled pixel.
NormalLossResult normal_loss(const NormalPrediction& pred,
                             const std::vector<ImageGrid>& pseudo_gt,
                             const std::vector<ImageGrid>& masks,
                             const SamplingConfig& cfg, std::uint64_t seed);

// -- Photometric --------------------------------------------------------------

struct PhotometricResult {
  double value = 0;
  double mse = 0;
  double ssim = 1;
  ImageGrid grad;  // d value / d predicted, same shape as the inputs
};

/// w11 * MSE + w12 * (1 - SSIM) between target and predicted images.
/// SSIM uses an 11x11 Gaussian window (sigma 1.5), standard constants,
/// averaged over fully-valid window positions. Gradients are analytic and
/// taken w.r.t. `predicted`. Throws on shape mismatch or images smaller
/// than the window.
PhotometricResult photometric(const ImageGrid& target,
                              const ImageGrid& predicted, double w11 = 1.0,
                              double w12 = 0.1);

// -- Total --------------------------------------------------------------------

struct LossWeights {
  double w1 = 1.0;     // photometric
  double w2 = 5e-3;    // weighted chamfer
  double w3 = 5e-3;    // normal NLL
  double w11 = 1.0;    // MSE inside photometric
  double w12 = 0.1;    // (1 - SSIM) inside photometric
  void validate() const;
};

double total_loss(double pho, double wcd, double normal, const LossWeights& w);

}  // namespace surfrec
