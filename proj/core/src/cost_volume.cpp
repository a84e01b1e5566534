// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/cost_volume.hpp"

#include <cmath>
#include <stdexcept>

namespace surfrec {

void DepthCandidates::validate() const {
  if (values.size() < 2) throw std::invalid_argument("candidates: need D >= 2");
  for (std::size_t k = 1; k < values.size(); ++k)
    if (!(values[k] > values[k - 1]))
      throw std::invalid_argument("candidates: not strictly increasing");
}

double DepthCandidates::local_spacing(double depth) const {
  const int D = count();
  if (D < 2) return 0;
  if (depth <= values[1]) return values[1] - values[0];
  for (int k = 1; k + 1 < D; ++k)
    if (depth <= values[k + 1]) return values[k + 1] - values[k];
  return values[D - 1] - values[D - 2];
}

DepthCandidates make_candidates(double near, double far, int D, DepthSpacing spacing) {
  if (!(near > 0 && near < far)) throw std::invalid_argument("candidates: need 0 < near < far");
  if (D < 2) throw std::invalid_argument("candidates: need D >= 2");
  DepthCandidates c;
  c.values.resize(D);
  for (int k = 0; k < D; ++k) {
    const double a = static_cast<double>(k) / (D - 1);
    if (spacing == DepthSpacing::linear) {
      c.values[k] = near + a * (far - near);
    } else {
      const double inv = (1.0 / near) + a * (1.0 / far - 1.0 / near);
      c.values[k] = 1.0 / inv;
    }
  }
  c.values.front() = near;
  c.values.back() = far;
  return c;
}

CostVolume build_cost_volume(const FeatureMap& features_i, const FeatureMap& features_j,
                             const View& view_i, const View& view_j,
                             const DepthCandidates& candidates) {
  candidates.validate();
  const ImageGrid& Fi = features_i.grid;
  const ImageGrid& Fj = features_j.grid;
  if (Fi.height != Fj.height || Fi.width != Fj.width || Fi.channels != Fj.channels)
    throw std::invalid_argument("cost volume: feature shapes differ");
  const int factor = view_i.intrinsics.width / Fi.width;
  if (factor * Fi.width != view_i.intrinsics.width)
    throw std::invalid_argument("cost volume: feature width does not divide view width");

  // Feature-resolution views for the plane-induced warp.
  View qi = view_i;
  qi.intrinsics = view_i.intrinsics.downsampled(factor);
  qi.image = ImageGrid(qi.intrinsics.height, qi.intrinsics.width, 1);
  View qj = view_j;
  qj.intrinsics = view_j.intrinsics.downsampled(factor);
  qj.image = ImageGrid(qj.intrinsics.height, qj.intrinsics.width, 1);

  const int H = Fi.height, W = Fi.width, C = Fi.channels, D = candidates.count();
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(C));

  CostVolume vol;
  vol.candidates = candidates;
  vol.logits = ImageGrid(H, W, D);
  for (int k = 0; k < D; ++k) {
    const WarpResult warped = homography_warp(Fj, qj, qi, candidates.values[k]);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double logit = kInvalidWarpLogit;
        if (warped.valid[static_cast<std::size_t>(y) * W + x]) {
          double dot = 0;
          for (int c = 0; c < C; ++c)
            dot += Fi.at(y, x, c) * warped.grid.at(y, x, c);
          logit = dot * inv_sqrt_c;
        }
        vol.logits.at(y, x, k) = logit;
      }
  }

  // 3x3 spatial box smoothing per depth slice.
  ImageGrid smoothed(H, W, D);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const int y0 = std::max(0, y - 1), y1 = std::min(H - 1, y + 1);
      const int x0 = std::max(0, x - 1), x1 = std::min(W - 1, x + 1);
      const double inv_cnt = 1.0 / ((y1 - y0 + 1) * (x1 - x0 + 1));
      for (int k = 0; k < D; ++k) {
        double s = 0;
        for (int yy = y0; yy <= y1; ++yy)
          for (int xx = x0; xx <= x1; ++xx) s += vol.logits.at(yy, xx, k);
        smoothed.at(y, x, k) = s * inv_cnt;
      }
    }
  vol.logits = std::move(smoothed);
  return vol;
}

namespace {

// Max-shifted softmax weights for one pixel; fixed summation order.
void softmax_weights(const ImageGrid& logits, int y, int x, std::vector<double>& w) {
  const int D = logits.channels;
  double mx = logits.at(y, x, 0);
  for (int k = 1; k < D; ++k) mx = std::max(mx, logits.at(y, x, k));
  double sum = 0;
  for (int k = 0; k < D; ++k) {
    w[k] = std::exp(logits.at(y, x, k) - mx);
    sum += w[k];
  }
  const double inv = 1.0 / sum;
  for (int k = 0; k < D; ++k) w[k] *= inv;
}

}  // namespace

ImageGrid softmax_depth(const CostVolume& vol) {
  vol.candidates.validate();
  const int D = vol.candidates.count();
  if (vol.logits.channels != D)
    throw std::invalid_argument("softmax_depth: logit channels != candidate count");
  ImageGrid out(vol.logits.height, vol.logits.width, 1);
  std::vector<double> w(D);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      softmax_weights(vol.logits, y, x, w);
      double d = 0;
      for (int k = 0; k < D; ++k) d += w[k] * vol.candidates.values[k];
      out.at(y, x) = d;
    }
  return out;
}

ConfidenceMap confidence_map(const CostVolume& vol) {
  vol.candidates.validate();
  const int D = vol.candidates.count();
  ImageGrid out(vol.logits.height, vol.logits.width, 1);
  std::vector<double> w(D);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      softmax_weights(vol.logits, y, x, w);
      double mx = 0;
      for (int k = 0; k < D; ++k) mx = std::max(mx, w[k]);
      out.at(y, x) = mx;
    }
  return ConfidenceMap{std::move(out)};
}

PointCloud backproject_depth(const ImageGrid& depth, const CameraIntrinsics& intr,
                             const CameraPose& pose, std::vector<int>* pixel_indices) {
  if (depth.channels != 1)
    throw std::invalid_argument("backproject_depth: expected 1-channel depth");
  PointCloud cloud;
  if (pixel_indices) pixel_indices->clear();
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const double d = depth.at(y, x);
      if (!(d > 0)) continue;
      cloud.points.push_back(unproject(Vec2(x, y), d, intr, pose));
      if (pixel_indices) pixel_indices->push_back(y * depth.width + x);
    }
  return cloud;
}

}  // namespace surfrec
