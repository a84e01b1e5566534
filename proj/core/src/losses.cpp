// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "surfrec/kdtree.hpp"
#include "surfrec/rng.hpp"

namespace surfrec {

void PointCloud::validate() const {
  if (!weights.empty() && weights.size() != points.size()) {
    throw std::invalid_argument("PointCloud: weights misaligned with points");
  }
  for (const Vec3& p : points) {
    if (!p.allFinite()) {
      throw std::invalid_argument("PointCloud: non-finite point");
    }
  }
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
      throw std::invalid_argument("PointCloud: weight outside [0,1]");
    }
  }
}

namespace {

/// One Chamfer direction: mean over `from` of weight * distance-to-nearest
/// in `to`, already divided by the raw count. Accumulates gradients.
double chamfer_direction(const std::vector<Vec3>& from,
                         const std::vector<Vec3>& to,
                         const double* weights_or_null, const KdTree3& tree,
                         double outer_factor, std::vector<Vec3>& grad_from,
                         std::vector<Vec3>& grad_to) {
  double sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    const KdTree3::Hit hit = tree.nearest(from[i]);
    const double d = std::sqrt(hit.d2);
    const double w = weights_or_null ? weights_or_null[i] : 1.0;
    sum += w * d;
    if (d > 0.0) {
      const Vec3 g =
          (outer_factor * inv_n * w / d) * (from[i] - to[hit.index]);
      grad_from[i] += g;
      grad_to[hit.index] -= g;
    }
  }
  return sum * inv_n;
}

ChamferResult chamfer_impl(const PointCloud& a, const PointCloud& b,
                           bool weighted) {
  a.validate();
  b.validate();
  if (a.points.empty() || b.points.empty()) {
    throw std::invalid_argument("chamfer: empty cloud");
  }
  if (weighted && (!a.has_weights() || !b.has_weights())) {
    throw std::invalid_argument("weighted_chamfer: missing weights");
  }
  ChamferResult out;
  out.grad_a.assign(a.size(), Vec3::Zero());
  out.grad_b.assign(b.size(), Vec3::Zero());
  const KdTree3 tree_b(b.points);
  const KdTree3 tree_a(a.points);
  const double* wa = weighted ? a.weights.data() : nullptr;
  const double* wb = weighted ? b.weights.data() : nullptr;
  const double side_a = chamfer_direction(a.points, b.points, wa, tree_b, 0.5,
                                          out.grad_a, out.grad_b);
  const double side_b = chamfer_direction(b.points, a.points, wb, tree_a, 0.5,
                                          out.grad_b, out.grad_a);
  out.value = 0.5 * (side_a + side_b);
  return out;
}

}  // namespace

ChamferResult chamfer(const PointCloud& a, const PointCloud& b) {
  return chamfer_impl(a, b, false);
}

ChamferResult weighted_chamfer(const PointCloud& a, const PointCloud& b) {
  return chamfer_impl(a, b, true);
}

AngMfResult angmf_nll(const Vec3& n, double kappa, const Vec3& n_hat) {
  if (!(kappa > 0.0)) {
    throw std::invalid_argument("angmf_nll: kappa must be positive");
  }
  const double dot = n.dot(n_hat);
  const double c_val = std::clamp(dot, -1.0, 1.0);
  const double theta = std::acos(c_val);
  const double exp_neg = std::exp(-kappa * M_PI);

  AngMfResult out;
  out.value = -std::log(kappa * kappa + 1.0) + std::log1p(exp_neg) +
              kappa * theta;
  out.grad_kappa = -2.0 * kappa / (kappa * kappa + 1.0) -
                   M_PI * exp_neg / (1.0 + exp_neg) + theta;

  const double c_grad = std::clamp(dot, -1.0 + 1e-7, 1.0 - 1e-7);
  const double dtheta_dc = -1.0 / std::sqrt(1.0 - c_grad * c_grad);
  const Vec3 raw = kappa * dtheta_dc * n_hat;
  const double n2 = std::max(n.squaredNorm(), 1e-12);
  out.grad_n = raw - (n.dot(raw) / n2) * n;
  return out;
}

int SamplingConfig::budget(std::size_t pixels) const {
  validate();
  const long long n = std::llround(fraction * static_cast<double>(pixels));
  return static_cast<int>(
      std::clamp<long long>(n, 1, static_cast<long long>(pixels)));
}

void SamplingConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("SamplingConfig: beta outside [0,1]");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("SamplingConfig: fraction outside (0,1]");
  }
}

std::vector<int> uncertainty_sample(const ImageGrid& kappa_map, int n,
                                    double beta, std::uint64_t seed) {
  if (kappa_map.channels != 1) {
    throw std::invalid_argument("uncertainty_sample: kappa map must be 1ch");
  }
  const int pixels = static_cast<int>(kappa_map.pixel_count());
  if (n < 1 || n > pixels) {
    throw std::invalid_argument(
        "uncertainty_sample: budget outside [1, pixel count]");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("uncertainty_sample: beta outside [0,1]");
  }

  const int n_low = static_cast<int>(std::floor(beta * n + 1e-9));
  std::vector<int> ids(pixels);
  std::iota(ids.begin(), ids.end(), 0);
  const auto lower_kappa = [&](int a, int b) {
    const double ka = kappa_map.data[a];
    const double kb = kappa_map.data[b];
    return ka != kb ? ka < kb : a < b;
  };
  if (n_low > 0 && n_low < pixels) {
    std::nth_element(ids.begin(), ids.begin() + n_low, ids.end(), lower_kappa);
  }

  std::vector<int> picked(ids.begin(), ids.begin() + n_low);
  std::vector<int> rest(ids.begin() + n_low, ids.end());
  std::sort(rest.begin(), rest.end());
  const int n_rand = n - n_low;
  for (int k = 0; k < n_rand; ++k) {
    const int j = k + static_cast<int>(rng::below(
                          seed, static_cast<std::uint64_t>(rest.size() - k),
                          0x73616d70ULL, static_cast<std::uint64_t>(k)));
    std::swap(rest[k], rest[j]);
    picked.push_back(rest[k]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

void NormalPrediction::validate() const {
  for (const NormalScale& s : scales) {
    if (s.normal.channels != 3 || s.kappa.channels != 1 ||
        s.normal.height != s.kappa.height || s.normal.width != s.kappa.width) {
      throw std::invalid_argument("NormalPrediction: malformed scale");
    }
    if (!s.normal.finite() || !s.kappa.finite()) {
      throw std::invalid_argument("NormalPrediction: non-finite values");
    }
    for (double k : s.kappa.data) {
      if (!(k > 0.0)) {
        throw std::invalid_argument("NormalPrediction: kappa must be positive");
      }
    }
  }
}

NormalLossResult normal_loss(const NormalPrediction& pred,
                             const std::vector<ImageGrid>& pseudo_gt,
                             const std::vector<ImageGrid>& masks,
                             const SamplingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (pred.scales.size() != pseudo_gt.size()) {
    throw std::invalid_argument("normal_loss: scale count mismatch");
  }
  if (!masks.empty() && masks.size() != pred.scales.size()) {
    throw std::invalid_argument("normal_loss: mask count mismatch");
  }
  const std::size_t n_scales = pred.scales.size();
  if (n_scales == 0) {
    throw std::invalid_argument("normal_loss: no scales");
  }

  NormalLossResult out;
  out.grad_normal.reserve(n_scales);
  out.grad_kappa.reserve(n_scales);
  for (std::size_t s = 0; s < n_scales; ++s) {
    const NormalScale& scale = pred.scales[s];
    const ImageGrid& gt = pseudo_gt[s];
    if (gt.channels != 3 || gt.height != scale.normal.height ||
        gt.width != scale.normal.width) {
      throw std::invalid_argument("normal_loss: pseudo-GT shape mismatch");
    }
    const ImageGrid* mask = masks.empty() ? nullptr : &masks[s];
    if (mask && (mask->channels != 1 || mask->height != scale.normal.height ||
                 mask->width != scale.normal.width)) {
      throw std::invalid_argument("normal_loss: mask shape mismatch");
    }

    out.grad_normal.emplace_back(scale.normal.height, scale.normal.width, 3);
    out.grad_kappa.emplace_back(scale.normal.height, scale.normal.width, 1);

    const int budget = cfg.budget(scale.kappa.pixel_count());
    const std::vector<int> sample = uncertainty_sample(
        scale.kappa, budget, cfg.beta,
        rng::hash(seed, 0x6e6f726dULL, static_cast<std::uint64_t>(s)));

    struct Picked {
      int pixel;
      AngMfResult r;
    };
    std::vector<Picked> contributions;
    contributions.reserve(sample.size());
    double sum = 0.0;
    for (int p : sample) {
      if (mask && mask->data[p] == 0.0) continue;
      const Vec3 n(scale.normal.data[3 * p + 0], scale.normal.data[3 * p + 1],
                   scale.normal.data[3 * p + 2]);
      const Vec3 nh(gt.data[3 * p + 0], gt.data[3 * p + 1], gt.data[3 * p + 2]);
      const AngMfResult r = angmf_nll(n, scale.kappa.data[p], nh);
      sum += r.value;
      contributions.push_back({p, r});
    }
    if (contributions.empty()) continue;

    const double count = static_cast<double>(contributions.size());
    out.value += sum / count / static_cast<double>(n_scales);
    const double gscale = 1.0 / (count * static_cast<double>(n_scales));
    for (const Picked& c : contributions) {
      for (int k = 0; k < 3; ++k) {
        out.grad_normal[s].data[3 * c.pixel + k] += gscale * c.r.grad_n[k];
      }
      out.grad_kappa[s].data[c.pixel] += gscale * c.r.grad_kappa;
    }
  }
  return out;
}

namespace {

constexpr int kWin = 11;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

const double* ssim_kernel() {
  static const std::vector<double> k = [] {
    std::vector<double> w(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return k.data();
}

/// Valid-region separable windowed sum of `src` (1ch plane, h x w doubles),
/// result (h-10) x (w-10).
std::vector<double> window_filter(const std::vector<double>& src, int h, int w) {
  const double* k = ssim_kernel();
  const int wh = h, ww = w - (kWin - 1);
  std::vector<double> tmp(static_cast<std::size_t>(wh) * ww);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ww; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWin; ++i) s += k[i] * src[y * w + x + i];
      tmp[y * ww + x] = s;
    }
  }
  const int oh = h - (kWin - 1);
  std::vector<double> out(static_cast<std::size_t>(oh) * ww);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ww; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWin; ++i) s += k[i] * tmp[(y + i) * ww + x];
      out[y * ww + x] = s;
    }
  }
  return out;
}

}  // namespace

PhotometricResult photometric(const ImageGrid& target,
                              const ImageGrid& predicted, double w11,
                              double w12) {
  if (!target.same_shape(predicted)) {
    throw std::invalid_argument("photometric: shape mismatch");
  }
  if (target.height < kWin || target.width < kWin) {
    throw std::invalid_argument("photometric: image smaller than SSIM window");
  }
  const int h = target.height, w = target.width, ch = target.channels;
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  PhotometricResult out;
  out.grad = ImageGrid(h, w, ch);

  const double inv_count = 1.0 / (static_cast<double>(plane) * ch);
  double mse_sum = 0.0;
  for (std::size_t i = 0; i < plane * ch; ++i) {
    const double d = predicted.data[i] - target.data[i];
    mse_sum += d * d;
    out.grad.data[i] = w11 * 2.0 * d * inv_count;
  }
  out.mse = mse_sum * inv_count;

  const int oh = h - (kWin - 1), ow = w - (kWin - 1);
  const std::size_t oplane = static_cast<std::size_t>(oh) * ow;
  const double inv_windows = 1.0 / (static_cast<double>(oplane) * ch);
  const double* kern = ssim_kernel();

  std::vector<double> px(plane), py(plane), px2(plane), py2(plane), pxy(plane);
  double ssim_sum = 0.0;
  for (int c = 0; c < ch; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double xv = target.data[i * ch + c];
      const double yv = predicted.data[i * ch + c];
      px[i] = xv;
      py[i] = yv;
      px2[i] = xv * xv;
      py2[i] = yv * yv;
      pxy[i] = xv * yv;
    }
    const std::vector<double> mx = window_filter(px, h, w);
    const std::vector<double> my = window_filter(py, h, w);
    const std::vector<double> ex2 = window_filter(px2, h, w);
    const std::vector<double> ey2 = window_filter(py2, h, w);
    const std::vector<double> exy = window_filter(pxy, h, w);

    // Per-window adjoints w.r.t. my, ey2, exy; scattered back through the
    // window in one pass below.
    std::vector<double> f_mu(oplane), f_e(oplane), f_x(oplane);
    for (std::size_t i = 0; i < oplane; ++i) {
      const double mux = mx[i], muy = my[i];
      const double sx2 = ex2[i] - mux * mux;
      const double sy2 = ey2[i] - muy * muy;
      const double sxy = exy[i] - mux * muy;
      const double a1 = 2.0 * mux * muy + kSsimC1;
      const double a2 = 2.0 * sxy + kSsimC2;
      const double b1 = mux * mux + muy * muy + kSsimC1;
      const double b2 = sx2 + sy2 + kSsimC2;
      const double s = a1 * a2 / (b1 * b2);
      ssim_sum += s;

      const double up = -w12 * inv_windows;  // dL/dSSIM(p)
      f_x[i] = up * 2.0 * a1 / (b1 * b2);
      f_e[i] = up * (-s / b2);
      f_mu[i] = up * (2.0 * mux * (a2 - a1) / (b1 * b2) -
                      2.0 * muy * s * (b2 - b1) / (b1 * b2));
    }

    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * ow + x;
        if (f_mu[i] == 0.0 && f_e[i] == 0.0 && f_x[i] == 0.0) continue;
        for (int dy = 0; dy < kWin; ++dy) {
          for (int dx = 0; dx < kWin; ++dx) {
            const double g = kern[dy] * kern[dx];
            const std::size_t j = static_cast<std::size_t>(y + dy) * w + x + dx;
            out.grad.data[j * ch + c] +=
                g * (f_mu[i] + 2.0 * py[j] * f_e[i] + px[j] * f_x[i]);
          }
        }
      }
    }
  }
  out.ssim = ssim_sum * inv_windows;
  out.value = w11 * out.mse + w12 * (1.0 - out.ssim);
  return out;
}

void LossWeights::validate() const {
  if (w1 < 0 || w2 < 0 || w3 < 0 || w11 < 0 || w12 < 0) {
    throw std::invalid_argument("LossWeights: negative weight");
  }
}

double total_loss(double pho, double wcd, double normal, const LossWeights& w) {
  w.validate();
  return w.w1 * pho + w.w2 * wcd + w.w3 * normal;
}

}  // namespace surfrec
