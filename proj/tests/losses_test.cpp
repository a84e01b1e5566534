// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "surfrec/kdtree.hpp"
#include "surfrec/losses.hpp"
#include "surfrec/rng.hpp"

using namespace surfrec;

namespace {

PointCloud random_cloud(int n, std::uint64_t seed, std::uint64_t salt) {
  PointCloud c;
  for (int i = 0; i < n; ++i)
    c.points.emplace_back(rng::uniform(seed, salt, i, 0) * 2 - 1,
                          rng::uniform(seed, salt, i, 1) * 2 - 1,
                          rng::uniform(seed, salt, i, 2) * 2 - 1);
  return c;
}

double brute_chamfer(const PointCloud& a, const PointCloud& b) {
  auto one_way = [](const PointCloud& p, const PointCloud& q) {
    double sum = 0;
    for (const Vec3& x : p.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& y : q.points) best = std::min(best, (x - y).norm());
      sum += best;
    }
    return sum / p.points.size();
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

}  // namespace

TEST_CASE("chamfer of two unit-separated singletons is their distance") {
  PointCloud a, b;
  a.points = {Vec3(0, 0, 0)};
  b.points = {Vec3(1, 0, 0)};
  const ChamferResult r = chamfer(a, b);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK((r.grad_a[0] - Vec3(-1, 0, 0)).norm() < 1e-12);
  CHECK((r.grad_b[0] - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK(chamfer(a, a).value == 0.0);
}

TEST_CASE("chamfer matches brute force on random cloud pairs") {
  for (int trial = 0; trial < 60; ++trial) {
    const int na = 1 + static_cast<int>(rng::below(5, 60, trial, 0));
    const int nb = 1 + static_cast<int>(rng::below(5, 60, trial, 1));
    const PointCloud a = random_cloud(na, 6, 2 * trial);
    const PointCloud b = random_cloud(nb, 6, 2 * trial + 1);
    CHECK(std::abs(chamfer(a, b).value - brute_chamfer(a, b)) < 1e-9);
  }
}

TEST_CASE("chamfer is symmetric in its arguments") {
  const PointCloud a = random_cloud(40, 7, 0);
  const PointCloud b = random_cloud(25, 7, 1);
  CHECK(chamfer(a, b).value == doctest::Approx(chamfer(b, a).value)
                                   .epsilon(1e-14));
}

TEST_CASE("weighted chamfer reduces to chamfer for unit weights") {
  PointCloud a = random_cloud(50, 8, 0);
  PointCloud b = random_cloud(30, 8, 1);
  a.weights.assign(a.size(), 1.0);
  b.weights.assign(b.size(), 1.0);
  CHECK(std::abs(weighted_chamfer(a, b).value - chamfer(a, b).value) < 1e-12);
  a.weights.assign(a.size(), 0.0);
  b.weights.assign(b.size(), 0.0);
  CHECK(weighted_chamfer(a, b).value == 0.0);
}

TEST_CASE("weighted chamfer throws on missing weights or empty clouds") {
  PointCloud a = random_cloud(5, 9, 0);
  PointCloud b = random_cloud(5, 9, 1);
  CHECK_THROWS_AS(weighted_chamfer(a, b), std::invalid_argument);
  a.weights.assign(a.size(), 0.5);
  b.weights.assign(b.size(), 0.5);
  CHECK_NOTHROW(weighted_chamfer(a, b));
  CHECK_THROWS_AS(chamfer(PointCloud{}, b), std::invalid_argument);
}

TEST_CASE("kd-tree nearest neighbors match a lexicographic brute scan") {
  const PointCloud pts = random_cloud(300, 10, 0);
  const KdTree3 tree(pts.points);
  for (int i = 0; i < 200; ++i) {
    const Vec3 q(rng::uniform(11, i, 0) * 3 - 1.5,
                 rng::uniform(11, i, 1) * 3 - 1.5,
                 rng::uniform(11, i, 2) * 3 - 1.5);
    const auto hit = tree.nearest(q);
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(pts.size()); ++j) {
      const double d2 = (pts.points[j] - q).squaredNorm();
      if (d2 < bd || (d2 == bd && j < best)) {
        bd = d2;
        best = j;
      }
    }
    CHECK(hit.index == best);
    CHECK(hit.d2 == bd);
  }
}

TEST_CASE("directional nll hits its closed form at zero angle") {
  const Vec3 n(0, 0, 1);
  const AngMfResult r = angmf_nll(n, 1.0, n);
  const double expected = -std::log(2.0) + std::log1p(std::exp(-M_PI));
  CHECK(std::abs(r.value - expected) < 1e-9);
  CHECK(r.grad_n.dot(n) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("directional nll grows monotonically with the angle") {
  for (double kappa : {0.3, 1.0, 5.0}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 60; ++i) {
      const double theta = i * (M_PI / 60.0);
      const Vec3 n(std::sin(theta), 0, std::cos(theta));
      const double v = angmf_nll(n, kappa, Vec3(0, 0, 1)).value;
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("directional nll approaches log 2 as kappa vanishes") {
  const Vec3 n(0, 0, 1);
  const double v = angmf_nll(n, 1e-12, n).value;
  CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK_THROWS_AS(angmf_nll(n, 0.0, n), std::invalid_argument);
  CHECK_THROWS_AS(angmf_nll(n, -1.0, n), std::invalid_argument);
}

TEST_CASE("directional nll n-gradient stays tangential and finite") {
  for (int i = 0; i < 50; ++i) {
    Vec3 n(rng::normal(12, i, 0), rng::normal(12, i, 1), rng::normal(12, i, 2));
    Vec3 m(rng::normal(13, i, 0), rng::normal(13, i, 1), rng::normal(13, i, 2));
    if (n.norm() < 1e-3 || m.norm() < 1e-3) continue;
    n.normalize();
    m.normalize();
    const AngMfResult r = angmf_nll(n, 0.5 + 2 * rng::uniform(14, i), m);
    CHECK(std::isfinite(r.value));
    CHECK(std::isfinite(r.grad_kappa));
    CHECK(std::abs(r.grad_n.dot(n)) < 1e-9 * (1.0 + r.grad_n.norm()));
  }
}

TEST_CASE("uncertainty sampling takes the low-kappa floor plus random rest") {
  ImageGrid kappa(4, 4, 1);
  for (int i = 0; i < 16; ++i) kappa.data[i] = 16 - i;  // lowest at index 15
  const int n = 10;
  const double beta = 0.7;  // floor(0.7*10) = 7 lowest-kappa picks
  const auto sel = uncertainty_sample(kappa, n, beta, 3);
  REQUIRE(sel.size() == static_cast<std::size_t>(n));
  CHECK(std::is_sorted(sel.begin(), sel.end()));
  CHECK(std::set<int>(sel.begin(), sel.end()).size() == sel.size());
  for (int idx = 9; idx < 16; ++idx)
    CHECK(std::find(sel.begin(), sel.end(), idx) != sel.end());
  CHECK(uncertainty_sample(kappa, n, beta, 3) == sel);
  // Budget arithmetic.
  SamplingConfig cfg;
  CHECK(cfg.budget(16) == 6);  // round(0.4*16)
  CHECK(cfg.budget(1) == 1);
}

TEST_CASE("photometric loss vanishes for identical images") {
  ImageGrid img(16, 16, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = rng::uniform(15, i);
  const PhotometricResult r = photometric(img, img);
  CHECK(r.mse == 0.0);
  CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.value) < 1e-12);
  for (double g : r.grad.data) CHECK(std::abs(g) < 1e-9);
}

TEST_CASE("photometric loss combines mse and ssim with the given weights") {
  ImageGrid a(16, 16, 1, 0.25);
  ImageGrid b(16, 16, 1, 0.75);
  const PhotometricResult r = photometric(a, b, 2.0, 0.5);
  CHECK(r.mse == doctest::Approx(0.25));
  CHECK(r.value == doctest::Approx(2.0 * r.mse + 0.5 * (1.0 - r.ssim)));
  // Constant images differ only in luminance; SSIM is below 1.
  CHECK(r.ssim < 1.0);
  CHECK_THROWS_AS(photometric(a, ImageGrid(8, 16, 1)), std::invalid_argument);
}

TEST_CASE("total loss is the weighted sum of its terms") {
  LossWeights w;
  CHECK(total_loss(1.0, 2.0, 3.0, w) ==
        doctest::Approx(1.0 + 5e-3 * 2.0 + 5e-3 * 3.0));
  w.w1 = 2.0;
  w.w2 = 0.1;
  w.w3 = 0.25;
  CHECK(total_loss(0.5, 1.0, 4.0, w) ==
        doctest::Approx(2.0 * 0.5 + 0.1 * 1.0 + 0.25 * 4.0));
}

TEST_CASE("normal loss scores identical normals at the zero-angle value") {
  const int size = 8;
  NormalPrediction pred;
  NormalScale s;
  s.normal = ImageGrid(size, size, 3);
  s.kappa = ImageGrid(size, size, 1, 1.0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) s.normal.at(y, x, 2) = 1.0;
  pred.scales = {s};
  const std::vector<ImageGrid> gt = {s.normal};
  SamplingConfig cfg;
  const NormalLossResult r = normal_loss(pred, gt, {}, cfg, 5);
  const double expected = -std::log(2.0) + std::log1p(std::exp(-M_PI));
  CHECK(r.value == doctest::Approx(expected).epsilon(1e-9));
  REQUIRE(r.grad_normal.size() == 1);
  REQUIRE(r.grad_kappa.size() == 1);
}

TEST_CASE("normal loss skips pixels masked to zero") {
  const int size = 4;
  NormalScale s;
  s.normal = ImageGrid(size, size, 3);
  s.kappa = ImageGrid(size, size, 1, 1.0);
  ImageGrid gt(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      s.normal.at(y, x, 2) = 1.0;
      // Ground truth disagrees only in the masked-out column.
      gt.at(y, x, x == 0 ? 0 : 2) = 1.0;
    }
  NormalPrediction pred;
  pred.scales = {s};
  ImageGrid mask(size, size, 1, 1.0);
  for (int y = 0; y < size; ++y) mask.at(y, 0) = 0.0;
  SamplingConfig cfg;
  cfg.fraction = 1.0;
  const NormalLossResult r = normal_loss(pred, {gt}, {mask}, cfg, 5);
  const double expected = -std::log(2.0) + std::log1p(std::exp(-M_PI));
  CHECK(r.value == doctest::Approx(expected).epsilon(1e-9));
  for (int y = 0; y < size; ++y) {
    CHECK(r.grad_normal[0].at(y, 0, 0) == 0.0);
    CHECK(r.grad_kappa[0].at(y, 0) == 0.0);
  }
}
