// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace surfrec::cli {

// Dataset-style configuration bundles. Explicit flags override preset values.
struct Preset {
  std::string name;
  double near = 0, far = 0;
  double voxel = 0, trunc = 0;
};

/// "re10k" (near 1, far 100, voxel 0.005, trunc 0.1) or
/// "scannet" (near 0.5, far 15, voxel 0.01, trunc 0.08).
Preset preset_by_name(const std::string& name);

struct SynthOptions {
  std::string scene = "box_room";  // textured_plane | box_room | sphere_room
  int views = 3;
  int size = 64;  // square images, must be divisible by 4
  std::uint64_t seed = 0;
  std::string preset = "scannet";
  std::string out;
};

struct ReconstructOptions {
  std::string bundle;  // directory produced by synth (or matching layout)
  std::string out;
  std::string preset = "scannet";
  int depth_bins = 128;
  int steps = 0;
  double lr = 1.0;  // multiplier on the per-class default learning rates
  double w1 = 1.0, w2 = 5e-3, w3 = 5e-3, w11 = 1.0, w12 = 0.1;
  double beta = 0.7;
  double sample_frac = 0.4;
  double voxel = -1, trunc = -1;  // <0: take from preset
  std::uint64_t seed = 0;
  bool held_out = false;  // use a third view for photometric supervision
};

struct EvalOptions {
  std::string pred_mesh;
  std::string gt_mesh;
  std::string cameras;  // cameras.json defining the culling frusta
  std::string pred_maps;  // optional dir with depth_/normal_NNN.pfm
  std::string gt_maps;    // optional dir with depth_/normal_NNN.pfm
  std::string scene_id = "scene";
  std::string preset;  // recorded in the report only
  double tau = 0.05;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::string out;  // metrics JSON path
};

struct RenderOptions {
  std::string splats;
  std::string cameras;
  int index = 0;  // camera record to render
  std::string out;  // prefix: writes <out>.png, <out>_depth.pfm, <out>_normal.pfm
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int instances = 20;
  double tol = 1e-3;
};

// Each command returns a process exit code: 0 success, 1 verification
// failure, 2 input/schema error. Unexpected exceptions escape to main.
int cmd_synth(const SynthOptions& opt);
int cmd_reconstruct(const ReconstructOptions& opt);
int cmd_eval(const EvalOptions& opt);
int cmd_render(const RenderOptions& opt);
int cmd_gradcheck(const GradcheckOptions& opt);

}  // namespace surfrec::cli
