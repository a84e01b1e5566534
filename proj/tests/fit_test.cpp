// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "surfrec/fit.hpp"
#include "surfrec/rng.hpp"
#include "surfrec/scene.hpp"

using namespace surfrec;

namespace {

/// Two laterally separated views of a textured plane at depth 3.
std::vector<View> plane_pair(int size) {
  SceneSpec spec;
  spec.kind = SceneKind::textured_plane;
  spec.dims = Vec3(4, 6, 1);
  spec.texture.seed = 7;
  const TriangleMesh mesh = make_scene(spec);
  CameraIntrinsics intr;
  intr.fx = intr.fy = 0.6 * size;
  intr.cx = intr.cy = (size - 1) * 0.5;
  intr.width = intr.height = size;
  std::vector<View> views;
  for (double bx : {0.0, 0.78125}) {
    View v{ImageGrid(size, size, 3), intr,
           CameraPose::look_at(Vec3(bx, 0, -3), Vec3(bx, 0, 0)), 0.5, 15.0};
    v.image = raycast_render(mesh, v, spec.texture).image;
    views.push_back(std::move(v));
  }
  return views;
}

ImageGrid facing_normals(int size) {
  ImageGrid n(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) n.at(y, x, 2) = -1.0;
  return n;
}

}  // namespace

TEST_CASE("adam takes a signed unit step on the first update") {
  std::vector<double> p = {1.0, -2.0, 0.5};
  std::vector<double> g = {0.3, -0.7, 0.0};
  std::vector<double> m(3, 0.0), v(3, 0.0);
  adam_step(p, g, m, v, 0.1, 0.9, 0.999, 1e-8, 1);
  // Bias-corrected m/v both equal g on step one, so the move is -lr*sign(g).
  CHECK(p[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(0.5));
}

TEST_CASE("adam accumulates the standard moment estimates") {
  std::vector<double> p = {0.0}, m = {0.0}, v = {0.0};
  const double g0 = 0.4;
  adam_step(p, {g0}, m, v, 0.01, 0.9, 0.999, 1e-8, 1);
  CHECK(m[0] == doctest::Approx(0.1 * g0));
  CHECK(v[0] == doctest::Approx(0.001 * g0 * g0));
  const double g1 = -0.2;
  adam_step(p, {g1}, m, v, 0.01, 0.9, 0.999, 1e-8, 2);
  CHECK(m[0] == doctest::Approx(0.9 * 0.1 * g0 + 0.1 * g1));
}

TEST_CASE("forward_reconstruct recovers coarse plane depth where confident") {
  const auto views = plane_pair(64);
  FitConfig cfg;
  const ImageGrid normals = facing_normals(64);
  const ForwardResult fwd =
      forward_reconstruct(views[0], views[1], normals, normals, cfg);
  CHECK_FALSE(fwd.degenerate_baseline);
  CHECK(fwd.coarse_depth1.height == 16);
  CHECK(fwd.depth_full1.height == 64);
  CHECK(fwd.field.size() > 0);
  CHECK(fwd.field.provenance.size() == fwd.field.size());

  // Among the most confident quarter of pixels, depth must be close to 3.
  std::vector<std::pair<double, double>> conf_depth;
  for (std::size_t i = 0; i < fwd.confidence1.grid.data.size(); ++i)
    conf_depth.emplace_back(fwd.confidence1.grid.data[i],
                            fwd.coarse_depth1.data[i]);
  std::sort(conf_depth.rbegin(), conf_depth.rend());
  int hits = 0;
  const int top = static_cast<int>(conf_depth.size() / 4);
  for (int i = 0; i < top; ++i)
    if (std::abs(conf_depth[i].second - 3.0) < 0.2) ++hits;
  CHECK(hits > top * 9 / 10);

  // Determinism.
  const ForwardResult again =
      forward_reconstruct(views[0], views[1], normals, normals, cfg);
  CHECK(again.coarse_depth1.data == fwd.coarse_depth1.data);
  CHECK(again.confidence1.grid.data == fwd.confidence1.grid.data);
}

TEST_CASE("identical views flag a degenerate baseline") {
  auto views = plane_pair(32);
  views[1] = views[0];
  const ImageGrid normals = facing_normals(32);
  const ForwardResult fwd =
      forward_reconstruct(views[0], views[1], normals, normals, FitConfig{});
  CHECK(fwd.degenerate_baseline);
}

TEST_CASE("a short fit lowers the loss without going non-finite") {
  const auto views = plane_pair(32);
  FitConfig cfg;
  cfg.steps = 8;
  cfg.depth_bins = 32;
  const ImageGrid normals = facing_normals(32);
  const FitReport rep =
      fit_scene(views[0], views[1], normals, normals, cfg);
  REQUIRE(rep.trace.size() == 9u);  // initial evaluation plus one per step
  for (const FitStep& s : rep.trace) {
    CHECK(std::isfinite(s.total));
    CHECK(std::isfinite(s.pho));
    CHECK(std::isfinite(s.wcd));
    CHECK(std::isfinite(s.normal));
  }
  CHECK(rep.trace.back().total < rep.trace.front().total);
  CHECK(rep.field.size() > 0);
  CHECK(rep.wall_seconds > 0.0);
}

TEST_CASE("loss traces serialize as one csv row per entry") {
  FitReport rep;
  rep.trace = {FitStep{0.5, 0.25, 0.125, 0.6}, FitStep{0.4, 0.2, 0.1, 0.5}};
  const std::string csv = loss_trace_csv(rep);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,pho,wcd,normal,total");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("fit config validation rejects bad rates and fractions") {
  FitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.steps = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FitConfig{};
  cfg.lr_mu = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = FitConfig{};
  cfg.sampling.fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
