// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "surfrec/cost_volume.hpp"
#include "surfrec/features.hpp"
#include "surfrec/rng.hpp"

using namespace surfrec;

namespace {

ImageGrid random_rgb(int size, std::uint64_t seed) {
  ImageGrid img(size, size, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = rng::uniform(seed, i);
  return img;
}

CostVolume volume_with_logits(int D, double fill) {
  CostVolume vol;
  vol.candidates = make_candidates(0.5, 15.0, D);
  vol.logits = ImageGrid(2, 3, D, fill);
  return vol;
}

}  // namespace

TEST_CASE("extract_features produces a quarter-resolution 8-channel map") {
  const ImageGrid img = random_rgb(32, 1);
  const FeatureMap f = extract_features(img);
  CHECK(f.grid.height == 8);
  CHECK(f.grid.width == 8);
  CHECK(f.grid.channels == kFeatureChannels);
  CHECK(f.grid.finite());
  CHECK_THROWS_AS(extract_features(ImageGrid(30, 32, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(extract_features(ImageGrid(32, 32, 1)),
                  std::invalid_argument);
}

TEST_CASE("extract_features is deterministic") {
  const ImageGrid img = random_rgb(32, 2);
  const FeatureMap a = extract_features(img);
  const FeatureMap b = extract_features(img);
  CHECK(a.grid.data == b.grid.data);
}

TEST_CASE("a constant image yields zero features") {
  ImageGrid img(16, 16, 3, 0.5);
  const FeatureMap f = extract_features(img);
  for (double v : f.grid.data) CHECK(v == 0.0);
}

TEST_CASE("make_candidates spans [near, far] strictly increasing") {
  for (auto spacing : {DepthSpacing::inverse_depth, DepthSpacing::linear}) {
    const DepthCandidates c = make_candidates(0.5, 15.0, 128, spacing);
    REQUIRE(c.count() == 128);
    CHECK(c.values.front() == 0.5);
    CHECK(c.values.back() == 15.0);
    for (int i = 1; i < c.count(); ++i) CHECK(c.values[i] > c.values[i - 1]);
  }
  CHECK_THROWS_AS(make_candidates(2.0, 1.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(make_candidates(1.0, 2.0, 1), std::invalid_argument);
}

TEST_CASE("inverse-depth candidates are uniform in 1/d") {
  const DepthCandidates c = make_candidates(1.0, 8.0, 8);
  const double step0 = 1.0 / c.values[0] - 1.0 / c.values[1];
  for (int i = 1; i + 1 < c.count(); ++i) {
    const double step = 1.0 / c.values[i] - 1.0 / c.values[i + 1];
    CHECK(step == doctest::Approx(step0).epsilon(1e-9));
  }
}

TEST_CASE("local_spacing returns the bracketing candidate gap") {
  const DepthCandidates c = make_candidates(1.0, 10.0, 10,
                                            DepthSpacing::linear);
  CHECK(c.local_spacing(5.5) == doctest::Approx(1.0));
  CHECK(c.local_spacing(0.2) == doctest::Approx(1.0));   // clamped low
  CHECK(c.local_spacing(99.0) == doctest::Approx(1.0));  // clamped high
}

TEST_CASE("a saturated one-hot volume recovers the candidate depth exactly") {
  CostVolume vol = volume_with_logits(128, 0.0);
  const int hot = 37;
  for (int y = 0; y < vol.logits.height; ++y)
    for (int x = 0; x < vol.logits.width; ++x)
      vol.logits.at(y, x, hot) = 1000.0;
  const ImageGrid depth = softmax_depth(vol);
  const ConfidenceMap conf = confidence_map(vol);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      CHECK(depth.at(y, x) == vol.candidates.values[hot]);
      CHECK(conf.grid.at(y, x) == 1.0);
    }
}

TEST_CASE("a uniform 128-bin volume has confidence exactly 1/128") {
  const CostVolume vol = volume_with_logits(128, 0.7);
  const ConfidenceMap conf = confidence_map(vol);
  for (double v : conf.grid.data) CHECK(v == 1.0 / 128.0);
  const ImageGrid depth = softmax_depth(vol);
  const double mean =
      std::accumulate(vol.candidates.values.begin(),
                      vol.candidates.values.end(), 0.0) / 128.0;
  for (double v : depth.data) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("softmax depth and confidence are shift invariant") {
  CostVolume vol = volume_with_logits(64, 0.0);
  for (std::size_t i = 0; i < vol.logits.data.size(); ++i)
    vol.logits.data[i] = 4.0 * rng::uniform(12, i) - 2.0;
  const ImageGrid d0 = softmax_depth(vol);
  const ConfidenceMap c0 = confidence_map(vol);
  for (double shift : {-50.0, 3.25, 400.0}) {
    CostVolume shifted = vol;
    for (double& v : shifted.logits.data) v += shift;
    const ImageGrid d1 = softmax_depth(shifted);
    const ConfidenceMap c1 = confidence_map(shifted);
    for (std::size_t i = 0; i < d0.data.size(); ++i) {
      CHECK(std::abs(d1.data[i] - d0.data[i]) < 1e-9);
      CHECK(std::abs(c1.grid.data[i] - c0.grid.data[i]) < 1e-9);
    }
  }
}

TEST_CASE("confidence lies in (1/D, 1]") {
  CostVolume vol = volume_with_logits(32, 0.0);
  for (std::size_t i = 0; i < vol.logits.data.size(); ++i)
    vol.logits.data[i] = 8.0 * rng::uniform(13, i);
  const ConfidenceMap conf = confidence_map(vol);
  for (double v : conf.grid.data) {
    CHECK(v > 1.0 / 32.0 - 1e-15);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("cost volume warps through the companion view") {
  const int size = 64;
  CameraIntrinsics intr;
  intr.fx = intr.fy = 0.6 * size;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  View v1{random_rgb(size, 21), intr, CameraPose::identity(), 0.5, 15.0};
  View v2{random_rgb(size, 22), intr,
          CameraPose::look_at(Vec3(0.5, 0, 0), Vec3(0.5, 0, 1)), 0.5, 15.0};
  const FeatureMap f1 = extract_features(v1.image);
  const FeatureMap f2 = extract_features(v2.image);
  const DepthCandidates cand = make_candidates(0.5, 15.0, 32);
  const CostVolume vol = build_cost_volume(f1, f2, v1, v2, cand);
  CHECK(vol.logits.height == size / 4);
  CHECK(vol.logits.width == size / 4);
  CHECK(vol.logits.channels == 32);
  CHECK(vol.logits.finite());
  // Deterministic.
  const CostVolume again = build_cost_volume(f1, f2, v1, v2, cand);
  CHECK(vol.logits.data == again.logits.data);
}

TEST_CASE("opposing views leave only sentinel logits") {
  const int size = 32;
  CameraIntrinsics intr;
  intr.fx = intr.fy = 0.6 * size;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  View v1{random_rgb(size, 31), intr, CameraPose::identity(), 0.5, 15.0};
  // Looks along -z from far behind: every warp lands behind the camera.
  View v2{random_rgb(size, 32), intr,
          CameraPose::look_at(Vec3(0, 0, 100), Vec3(0, 0, 200)), 0.5, 15.0};
  const FeatureMap f1 = extract_features(v1.image);
  const FeatureMap f2 = extract_features(v2.image);
  const CostVolume vol =
      build_cost_volume(f1, f2, v1, v2, make_candidates(0.5, 15.0, 8));
  for (double v : vol.logits.data)
    CHECK(v == doctest::Approx(kInvalidWarpLogit).epsilon(1e-12));
}

TEST_CASE("backproject_depth preserves row-major pixel order") {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 10;
  intr.cx = intr.cy = 1.5;
  intr.width = intr.height = 4;
  ImageGrid depth(4, 4, 1, 2.0);
  depth.at(1, 2) = 0.0;  // dropped
  std::vector<int> pixels;
  const PointCloud cloud =
      backproject_depth(depth, intr, CameraPose::identity(), &pixels);
  REQUIRE(cloud.size() == 15);
  REQUIRE(pixels.size() == 15);
  for (std::size_t i = 1; i < pixels.size(); ++i)
    CHECK(pixels[i] > pixels[i - 1]);
  CHECK(std::find(pixels.begin(), pixels.end(), 6) == pixels.end());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int y = pixels[i] / 4, x = pixels[i] % 4;
    const auto [px, z] =
        project(cloud.points[i], intr, CameraPose::identity());
    CHECK(px.x() == doctest::Approx(x).epsilon(1e-9));
    CHECK(px.y() == doctest::Approx(y).epsilon(1e-9));
    CHECK(z == doctest::Approx(2.0));
  }
}
