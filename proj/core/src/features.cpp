// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace surfrec {

namespace {

ImageGrid luma_of(const ImageGrid& image) {
  ImageGrid out(image.height, image.width, 1);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      out.at(y, x) = 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) +
                     0.114 * image.at(y, x, 2);
  return out;
}

void standardize_channel(ImageGrid& g, int c) {
  const std::size_t n = g.pixel_count();
  double mean = 0;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) mean += g.at(y, x, c);
  mean /= static_cast<double>(n);
  double var = 0;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const double d = g.at(y, x, c) - mean;
      var += d * d;
    }
  var /= static_cast<double>(n);
  const double std = std::sqrt(var);
  if (std < 1e-12) {
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x) g.at(y, x, c) = 0.0;
    return;
  }
  const double inv = 1.0 / std;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) g.at(y, x, c) = (g.at(y, x, c) - mean) * inv;
}

}  // namespace

FeatureMap extract_features(const ImageGrid& image) {
  if (image.channels != 3)
    throw std::invalid_argument("extract_features: expected a 3-channel image");
  if (image.height % kFeatureStride != 0 || image.width % kFeatureStride != 0)
    throw std::invalid_argument("extract_features: sides must be divisible by 4");
  const ImageGrid L = downsample(luma_of(image), kFeatureStride);
  const int H = L.height, W = L.width;
  ImageGrid f(H, W, kFeatureChannels);

  auto lum = [&](int y, int x) {
    return L.at(std::clamp(y, 0, H - 1), std::clamp(x, 0, W - 1));
  };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double c = lum(y, x);
      double s = 0, s2 = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const double v = lum(y + dy, x + dx);
          s += v;
          s2 += v * v;
        }
      const double m = s / 9.0;
      f.at(y, x, 0) = c;
      f.at(y, x, 1) = 0.5 * (lum(y, x + 1) - lum(y, x - 1));
      f.at(y, x, 2) = 0.5 * (lum(y + 1, x) - lum(y - 1, x));
      f.at(y, x, 3) = m;
      f.at(y, x, 4) = std::sqrt(std::max(0.0, s2 / 9.0 - m * m));
      f.at(y, x, 5) = lum(y, x + 1) - 2.0 * c + lum(y, x - 1);
      f.at(y, x, 6) = lum(y + 1, x) - 2.0 * c + lum(y - 1, x);
      f.at(y, x, 7) = 0.25 * (lum(y + 1, x + 1) - lum(y + 1, x - 1) -
                              lum(y - 1, x + 1) + lum(y - 1, x - 1));
    }
  for (int c = 0; c < kFeatureChannels; ++c) standardize_channel(f, c);
  // Local energy equalization: scale each pixel's channel vector by the
  // inverse RMS channel energy over its 3x3 neighborhood. Matching then
  // compares texture pattern rather than texture strength, so weakly
  // textured windows localize as reliably as strong ones. The floor keeps
  // near-flat regions from being amplified into fake texture.
  ImageGrid energy(H, W, 1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double e = 0;
      int count = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = std::clamp(y + dy, 0, H - 1);
          const int xx = std::clamp(x + dx, 0, W - 1);
          for (int c = 0; c < kFeatureChannels; ++c)
            e += f.at(yy, xx, c) * f.at(yy, xx, c);
          ++count;
        }
      energy.at(y, x) = e / (count * kFeatureChannels);
    }
  constexpr double kEnergyFloor = 0.05;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double scale =
          kFeatureGain / std::sqrt(energy.at(y, x) + kEnergyFloor);
      for (int c = 0; c < kFeatureChannels; ++c) f.at(y, x, c) *= scale;
    }
  return FeatureMap{std::move(f)};
}

}  // namespace surfrec
