// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace surfrec {

bool ImageGrid::finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

double bilinear_sample(const ImageGrid& g, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto clampx = [&](int v) { return std::clamp(v, 0, g.width - 1); };
  auto clampy = [&](int v) { return std::clamp(v, 0, g.height - 1); };
  const double v00 = g.at(clampy(y0), clampx(x0), c);
  const double v01 = g.at(clampy(y0), clampx(x0 + 1), c);
  const double v10 = g.at(clampy(y0 + 1), clampx(x0), c);
  const double v11 = g.at(clampy(y0 + 1), clampx(x0 + 1), c);
  return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

ImageGrid downsample(const ImageGrid& g, int factor) {
  if (factor < 1 || g.height % factor != 0 || g.width % factor != 0)
    throw std::invalid_argument("downsample: factor does not divide image size");
  ImageGrid out(g.height / factor, g.width / factor, g.channels);
  const double inv = 1.0 / (factor * factor);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < g.channels; ++c) {
        double s = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            s += g.at(y * factor + dy, x * factor + dx, c);
        out.at(y, x, c) = s * inv;
      }
  return out;
}

ImageGrid upsample_bilinear(const ImageGrid& g, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample_bilinear: factor < 1");
  ImageGrid out(g.height * factor, g.width * factor, g.channels);
  const double off = (factor - 1) * 0.5;
  for (int y = 0; y < out.height; ++y) {
    const double sy = (y - off) / factor;
    for (int x = 0; x < out.width; ++x) {
      const double sx = (x - off) / factor;
      for (int c = 0; c < g.channels; ++c)
        out.at(y, x, c) = bilinear_sample(g, sx, sy, c);
    }
  }
  return out;
}

double mse(const ImageGrid& a, const ImageGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return a.data.empty() ? 0.0 : s / a.data.size();
}

double psnr(const ImageGrid& a, const ImageGrid& b) {
  const double m = mse(a, b);
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

}  // namespace surfrec
