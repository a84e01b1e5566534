// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "surfrec/image.hpp"

namespace surfrec {

inline constexpr int kFeatureChannels = 8;
inline constexpr int kFeatureStride = 4;  // feature maps live at 1/4 resolution

// Channel scale applied after standardization. Matching logits grow with the
// squared scale while their ratios are preserved, so this sets how sharply
// the depth softmax concentrates; 3.0 makes a correct match dominate a
// 128-way softmax the way learned feature magnitudes would.
inline constexpr double kFeatureGain = 3.5;

/// Hand-crafted matching descriptor at 1/4 input resolution, computed from
/// area-downsampled luma. Channels: luma, central-difference x/y gradients,
/// 3x3 luma mean, 3x3 luma standard deviation, and the three signed second
/// derivatives (xx, yy, xy). Each channel is standardized to zero mean / unit
/// variance over the map (zero-variance channels stay identically zero).
struct FeatureMap {
  ImageGrid grid;  // grid.channels == kFeatureChannels
  int channels() const { return grid.channels; }
};

/// Deterministic descriptor extraction from a 3-channel image whose sides are
/// divisible by 4.
FeatureMap extract_features(const ImageGrid& image);

}  // namespace surfrec
