// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>
#include <stdexcept>

#include <CLI11.hpp>

#include "commands.hpp"
#include "surfrec/io.hpp"

namespace {

constexpr int kExitVerification = 1;
constexpr int kExitSchema = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace surfrec::cli;

  CLI::App app{"surfrec: two-view surfel reconstruction pipeline"};
  app.require_subcommand(1);

  SynthOptions synth;
  CLI::App* s = app.add_subcommand("synth", "Write a synthetic scene bundle");
  s->add_option("--scene", synth.scene,
                "textured_plane | box_room | sphere_room");
  s->add_option("--views", synth.views, "Number of posed views");
  s->add_option("--size", synth.size, "Square image size (multiple of 4)");
  s->add_option("--seed", synth.seed, "Texture/geometry seed");
  s->add_option("--preset", synth.preset, "re10k | scannet");
  s->add_option("--out", synth.out, "Output bundle directory")->required();

  ReconstructOptions rec;
  CLI::App* r = app.add_subcommand(
      "reconstruct", "Splat forward pass, optional fit, mesh extraction");
  r->add_option("--bundle", rec.bundle, "Input bundle directory")->required();
  r->add_option("--out", rec.out, "Output run directory")->required();
  r->add_option("--preset", rec.preset, "re10k | scannet");
  r->add_option("--depth-bins", rec.depth_bins, "Plane-sweep candidates");
  r->add_option("--steps", rec.steps, "Optimization steps (0 = forward only)");
  r->add_option("--lr", rec.lr, "Learning-rate multiplier");
  r->add_option("--w1", rec.w1, "Photometric weight");
  r->add_option("--w2", rec.w2, "Weighted-Chamfer weight");
  r->add_option("--w3", rec.w3, "Normal-loss weight");
  r->add_option("--w11", rec.w11, "MSE weight inside photometric");
  r->add_option("--w12", rec.w12, "1-SSIM weight inside photometric");
  r->add_option("--beta", rec.beta, "Low-kappa fraction for sampling");
  r->add_option("--sample-frac", rec.sample_frac, "Sampled pixel fraction");
  r->add_option("--voxel", rec.voxel, "TSDF voxel size (overrides preset)");
  r->add_option("--trunc", rec.trunc, "TSDF truncation (overrides preset)");
  r->add_option("--seed", rec.seed, "Sampling seed");
  r->add_flag("--held-out", rec.held_out,
              "Supervise photometric loss on a third view when present");

  EvalOptions ev;
  CLI::App* e = app.add_subcommand("eval", "Mesh and map metrics");
  e->add_option("--pred", ev.pred_mesh, "Predicted mesh (.ply/.obj)")
      ->required();
  e->add_option("--gt", ev.gt_mesh, "Ground-truth mesh (.ply/.obj)")
      ->required();
  e->add_option("--cameras", ev.cameras, "cameras.json for frustum culling");
  e->add_option("--pred-maps", ev.pred_maps, "Dir with predicted PFM maps");
  e->add_option("--gt-maps", ev.gt_maps, "Dir with ground-truth PFM maps");
  e->add_option("--scene-id", ev.scene_id, "Identifier recorded in the report");
  e->add_option("--preset", ev.preset, "Recorded in the report");
  e->add_option("--tau", ev.tau, "F-score distance threshold");
  e->add_option("--samples", ev.samples, "Surface samples per mesh");
  e->add_option("--seed", ev.seed, "Sampling seed");
  e->add_option("--out", ev.out, "Metrics JSON path")->required();

  RenderOptions ren;
  CLI::App* n = app.add_subcommand("render", "Render a stored splat field");
  n->add_option("--splats", ren.splats, "splats.ply")->required();
  n->add_option("--cameras", ren.cameras, "cameras.json")->required();
  n->add_option("--index", ren.index, "Camera record to render");
  n->add_option("--out", ren.out, "Output prefix")->required();

  GradcheckOptions gc;
  CLI::App* g = app.add_subcommand("gradcheck",
                                   "Finite-difference gradient verification");
  g->add_option("--seed", gc.seed, "Instance seed");
  g->add_option("--instances", gc.instances, "Trials per parameter class");
  g->add_option("--tol", gc.tol, "Max relative error accepted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitSchema;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*r) return cmd_reconstruct(rec);
    if (*e) return cmd_eval(ev);
    if (*n) return cmd_render(ren);
    if (*g) return cmd_gradcheck(gc);
  } catch (const surfrec::io::SchemaError& err) {
    std::fprintf(stderr, "schema error: %s\n", err.what());
    return kExitSchema;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "invalid input: %s\n", err.what());
    return kExitSchema;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitVerification;
  }
  return kExitSchema;
}
