// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace surfrec {

/// Dense row-major image of scalars, `channels` values per pixel.
/// Pixel (0,0) is top-left; pixel centers sit at integer coordinates.
struct ImageGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  ImageGrid() = default;
  ImageGrid(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool same_shape(const ImageGrid& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  /// All values finite.
  bool finite() const;
};

/// Clamp-to-edge bilinear sample at continuous coords (x,y), integer = center.
double bilinear_sample(const ImageGrid& g, double x, double y, int c);

/// True iff a bilinear sample at (x,y) touches only real pixels.
inline bool bilinear_in_bounds(const ImageGrid& g, double x, double y) {
  return x >= 0.0 && y >= 0.0 && x <= g.width - 1 && y <= g.height - 1;
}

/// Area-average pooling by an integer factor that must divide both dims.
/// Throws std::invalid_argument on non-divisible sizes.
ImageGrid downsample(const ImageGrid& g, int factor);

/// Bilinear upsampling by an integer factor, aligned so that
/// downsample(upsample(g)) reproduces pixel centers (grid offset (f-1)/2).
ImageGrid upsample_bilinear(const ImageGrid& g, int factor);

/// Mean over all pixels/channels of |a - b|^2.
double mse(const ImageGrid& a, const ImageGrid& b);

/// PSNR in dB for images in [0,1]; returns +inf for identical inputs.
double psnr(const ImageGrid& a, const ImageGrid& b);

}  // namespace surfrec
