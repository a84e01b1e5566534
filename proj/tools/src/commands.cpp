// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "surfrec/fit.hpp"
#include "surfrec/gradcheck.hpp"
#include "surfrec/io.hpp"
#include "surfrec/metrics.hpp"
#include "surfrec/rng.hpp"
#include "surfrec/scene.hpp"
#include "surfrec/tsdf.hpp"

namespace surfrec::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string index_name(const std::string& stem, int i, const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d.%s", stem.c_str(), i, ext.c_str());
  return buf;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error(p.string() + ": cannot create directory");
}

SceneSpec scene_spec_for(SceneKind kind, std::uint64_t seed) {
  SceneSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.texture.seed = seed;
  // Plane width chosen so every camera in the rig sees the full plane at its
  // depth; on-plane pixels then always have a true match in the other view.
  if (kind == SceneKind::textured_plane) spec.dims = Vec3(4, 6, 1);
  return spec;
}

/// Deterministic camera rig per scene kind: a short lateral arc of views so
/// that consecutive pairs form usable stereo baselines.
std::vector<CameraPose> rig_for(SceneKind kind, int n_views) {
  std::vector<CameraPose> poses;
  const double spread = n_views > 1 ? 1.0 / (n_views - 1) : 0.0;
  for (int i = 0; i < n_views; ++i) {
    const double s = n_views > 1 ? -0.5 + i * spread : 0.0;
    switch (kind) {
      case SceneKind::textured_plane:
        // Pure lateral translation keeps the plane fronto-parallel to the
        // sweep planes, so ground-truth depth is constant across pixels. The
        // spacing gives an integer coarse-pixel disparity at the plane depth,
        // so feature warps at the true depth sample on grid centers.
        poses.push_back(CameraPose::look_at(Vec3(0.78125 * s, 0.0, -3.0),
                                            Vec3(0.78125 * s, 0.0, 0.0)));
        break;
      case SceneKind::box_room:
        // Aimed toward a corner so side wall, floor and ceiling are visible.
        poses.push_back(CameraPose::look_at(Vec3(0.8 * s, 0.1 * s, -0.25),
                                            Vec3(0.5 + 0.1 * s, 0.15, 1.0)));
        break;
      case SceneKind::sphere_room:
        poses.push_back(CameraPose::look_at(Vec3(0.6 * s, 0.1 * s, 0.0),
                                            Vec3(0.1 * s, 0, 2.0)));
        break;
    }
  }
  return poses;
}

CameraIntrinsics intrinsics_for(int size) {
  CameraIntrinsics intr;
  // ~80 degree horizontal FOV: room interiors show corners and side walls.
  intr.fx = intr.fy = 0.6 * size;
  intr.cx = intr.cy = 0.5 * (size - 1);
  intr.width = intr.height = size;
  return intr;
}

struct Bundle {
  std::vector<View> views;
  std::vector<ImageGrid> gt_depth;    // may be empty
  std::vector<ImageGrid> gt_normals;  // may be empty
};

Bundle load_bundle(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "cameras.json")) {
    throw io::SchemaError(dir + ": missing cameras.json");
  }
  const auto cameras = io::read_cameras_json((root / "cameras.json").string());
  if (cameras.size() < 2) {
    throw io::SchemaError(dir + ": bundle needs at least two cameras");
  }
  Bundle bundle;
  bool any_depth = true, any_normal = true;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    View v;
    v.intrinsics = cameras[i].intrinsics;
    v.pose = cameras[i].pose;
    v.near = cameras[i].near;
    v.far = cameras[i].far;
    const fs::path img = root / index_name("image", static_cast<int>(i), "png");
    if (!fs::exists(img)) {
      throw io::SchemaError(img.string() + ": missing image");
    }
    v.image = io::read_png(img.string());
    if (v.image.height != v.intrinsics.height ||
        v.image.width != v.intrinsics.width) {
      throw io::SchemaError(img.string() + ": image size does not match camera");
    }
    bundle.views.push_back(std::move(v));

    const fs::path dep = root / index_name("depth", static_cast<int>(i), "pfm");
    const fs::path nor = root / index_name("normal", static_cast<int>(i), "pfm");
    if (fs::exists(dep) && any_depth) {
      bundle.gt_depth.push_back(io::read_pfm(dep.string()));
    } else {
      any_depth = false;
    }
    if (fs::exists(nor) && any_normal) {
      bundle.gt_normals.push_back(io::read_pfm(nor.string()));
    } else {
      any_normal = false;
    }
  }
  if (!any_depth) bundle.gt_depth.clear();
  if (!any_normal) bundle.gt_normals.clear();
  return bundle;
}

ImageGrid facing_camera_normals(int height, int width) {
  ImageGrid n(height, width, 3);
  for (std::size_t i = 0; i < n.pixel_count(); ++i) n.data[3 * i + 2] = -1.0;
  return n;
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error(path + ": write failed");
}

}  // namespace

Preset preset_by_name(const std::string& name) {
  if (name == "re10k") return {"re10k", 1.0, 100.0, 0.005, 0.1};
  if (name == "scannet") return {"scannet", 0.5, 15.0, 0.01, 0.08};
  throw std::invalid_argument("unknown preset '" + name +
                              "' (expected re10k or scannet)");
}

int cmd_synth(const SynthOptions& opt) {
  if (opt.views < 2) throw std::invalid_argument("synth: need >= 2 views");
  if (opt.size < 16 || opt.size % 4 != 0) {
    throw std::invalid_argument("synth: size must be >= 16 and divisible by 4");
  }
  if (opt.out.empty()) throw std::invalid_argument("synth: --out is required");
  const Preset preset = preset_by_name(opt.preset);
  const SceneKind kind = scene_kind_from_string(opt.scene);
  const SceneSpec spec = scene_spec_for(kind, opt.seed);
  const TriangleMesh mesh = make_scene(spec);

  ensure_dir(opt.out);
  const fs::path root(opt.out);
  const CameraIntrinsics intr = intrinsics_for(opt.size);
  const auto poses = rig_for(kind, opt.views);

  std::vector<io::CameraRecord> cameras;
  for (int i = 0; i < opt.views; ++i) {
    View v;
    v.intrinsics = intr;
    v.pose = poses[i];
    v.near = preset.near;
    v.far = preset.far;
    v.image = ImageGrid(opt.size, opt.size, 3);
    const OracleRender r = raycast_render(mesh, v, spec.texture);
    io::write_png((root / index_name("image", i, "png")).string(), r.image);
    io::write_pfm((root / index_name("depth", i, "pfm")).string(), r.depth);
    io::write_pfm((root / index_name("normal", i, "pfm")).string(), r.normal);
    cameras.push_back({intr, poses[i], preset.near, preset.far});
  }
  io::write_cameras_json((root / "cameras.json").string(), cameras);
  io::write_mesh_ply((root / "gt.ply").string(), mesh);
  return 0;
}

int cmd_reconstruct(const ReconstructOptions& opt) {
  if (opt.out.empty()) {
    throw std::invalid_argument("reconstruct: --out is required");
  }
  const Preset preset = preset_by_name(opt.preset);
  Bundle bundle = load_bundle(opt.bundle);
  const std::size_t n_views = bundle.views.size();
  for (std::size_t i = 1; i < n_views; ++i) {
    if (bundle.views[i].image.height != bundle.views[0].image.height ||
        bundle.views[i].image.width != bundle.views[0].image.width) {
      throw io::SchemaError(opt.bundle + ": inconsistent image sizes");
    }
  }

  FitConfig cfg;
  cfg.steps = opt.steps;
  cfg.lr_mu *= opt.lr;
  cfg.lr_scale *= opt.lr;
  cfg.lr_q *= opt.lr;
  cfg.lr_alpha *= opt.lr;
  cfg.lr_color *= opt.lr;
  cfg.lr_kappa *= opt.lr;
  cfg.weights.w1 = opt.w1;
  cfg.weights.w2 = opt.w2;
  cfg.weights.w3 = opt.w3;
  cfg.weights.w11 = opt.w11;
  cfg.weights.w12 = opt.w12;
  cfg.sampling.beta = opt.beta;
  cfg.sampling.fraction = opt.sample_frac;
  cfg.depth_bins = opt.depth_bins;
  cfg.seed = opt.seed;
  cfg.held_out_photometric = opt.held_out && n_views >= 3;

  const View& v1 = bundle.views[0];
  const View& v2 = bundle.views[1];
  const ImageGrid n1 =
      bundle.gt_normals.size() >= 2
          ? bundle.gt_normals[0]
          : facing_camera_normals(v1.image.height, v1.image.width);
  const ImageGrid n2 =
      bundle.gt_normals.size() >= 2
          ? bundle.gt_normals[1]
          : facing_camera_normals(v2.image.height, v2.image.width);

  ForwardResult fwd = forward_reconstruct(v1, v2, n1, n2, cfg);

  const fs::path root(opt.out);
  ensure_dir(root / "inputs");
  ensure_dir(root / "intermediates");
  ensure_dir(root / "mesh");
  ensure_dir(root / "metrics");

  // Byte-copies of the inputs so runs are self-contained and diffable.
  fs::copy_file(fs::path(opt.bundle) / "cameras.json",
                root / "inputs" / "cameras.json",
                fs::copy_options::overwrite_existing);
  for (std::size_t i = 0; i < n_views; ++i) {
    const std::string name = index_name("image", static_cast<int>(i), "png");
    fs::copy_file(fs::path(opt.bundle) / name, root / "inputs" / name,
                  fs::copy_options::overwrite_existing);
  }

  const fs::path inter = root / "intermediates";
  io::write_pfm((inter / "coarse_depth_000.pfm").string(), fwd.coarse_depth1);
  io::write_pfm((inter / "coarse_depth_001.pfm").string(), fwd.coarse_depth2);
  io::write_pfm((inter / "confidence_000.pfm").string(), fwd.confidence_full1);
  io::write_pfm((inter / "confidence_001.pfm").string(), fwd.confidence_full2);

  SplatField field = fwd.field;
  FitReport report;
  const bool fitted = opt.steps > 0;
  if (fitted) {
    report = fit_field(std::move(field), {v1, v2}, {n1, n2},
                       {fwd.confidence_full1, fwd.confidence_full2}, cfg,
                       cfg.held_out_photometric ? &bundle.views[2] : nullptr);
    field = std::move(report.field);
    std::ofstream trace((inter / "loss_trace.csv").string(), std::ios::binary);
    trace << loss_trace_csv(report);
  }

  // Final per-view rendered maps at input resolution.
  for (std::size_t i = 0; i < 2; ++i) {
    const RenderOutput r = render(field, bundle.views[i]);
    io::write_pfm(
        (inter / index_name("depth", static_cast<int>(i), "pfm")).string(),
        r.depth);
    io::write_pfm(
        (inter / index_name("normal", static_cast<int>(i), "pfm")).string(),
        r.normal);
    io::write_png(
        (inter / index_name("render", static_cast<int>(i), "png")).string(),
        r.rgb);
  }
  io::write_splats_ply((inter / "splats.ply").string(), field);

  TsdfConfig tsdf_cfg;
  tsdf_cfg.voxel_size = opt.voxel > 0 ? opt.voxel : preset.voxel;
  tsdf_cfg.truncation = opt.trunc > 0 ? opt.trunc : preset.trunc;
  const TriangleMesh mesh = extract_mesh(field, {v1, v2}, tsdf_cfg);
  io::write_mesh_ply((root / "mesh" / "mesh.ply").string(), mesh);

  ordered_json run;
  run["preset"] = preset.name;
  run["steps"] = opt.steps;
  run["seed"] = opt.seed;
  run["depth_bins"] = opt.depth_bins;
  run["weights"] = {{"w1", cfg.weights.w1},
                    {"w2", cfg.weights.w2},
                    {"w3", cfg.weights.w3},
                    {"w11", cfg.weights.w11},
                    {"w12", cfg.weights.w12}};
  run["voxel"] = tsdf_cfg.voxel_size;
  run["trunc"] = tsdf_cfg.truncation;
  run["splats"] = field.splats.size();
  run["degenerate_baseline"] = fwd.degenerate_baseline;
  run["mesh_vertices"] = mesh.vertices.size();
  run["mesh_faces"] = mesh.faces.size();
  if (fitted) {
    run["loss_initial"] = report.trace.front().total;
    run["loss_final"] = report.trace.back().total;
  }
  write_json((root / "metrics" / "run.json").string(), run);
  return 0;
}

int cmd_eval(const EvalOptions& opt) {
  if (opt.out.empty()) throw std::invalid_argument("eval: --out is required");
  const TriangleMesh pred = io::read_mesh(opt.pred_mesh);
  TriangleMesh gt = io::read_mesh(opt.gt_mesh);

  std::vector<View> views;
  if (!opt.cameras.empty()) {
    for (const io::CameraRecord& cam : io::read_cameras_json(opt.cameras)) {
      View v;
      v.intrinsics = cam.intrinsics;
      v.pose = cam.pose;
      v.near = cam.near;
      v.far = cam.far;
      v.image = ImageGrid(cam.intrinsics.height, cam.intrinsics.width, 3);
      views.push_back(std::move(v));
    }
    gt = frustum_cull(gt, views);
    if (gt.faces.empty()) {
      throw std::runtime_error(
          "eval: ground-truth mesh is empty after frustum culling");
    }
  }
  if (pred.faces.empty()) {
    throw std::runtime_error("eval: predicted mesh has no faces");
  }

  const PointCloud pred_pts =
      sample_mesh(pred, opt.samples, rng::hash(opt.seed, 1));
  const PointCloud gt_pts = sample_mesh(gt, opt.samples, rng::hash(opt.seed, 2));
  const MeshMetrics mm = mesh_metrics(pred_pts, gt_pts, opt.tau);

  ordered_json out;
  out["scene"] = opt.scene_id;
  if (!opt.preset.empty()) out["preset"] = opt.preset;
  out["tau"] = mm.tau;
  out["samples"] = mm.samples;
  out["seed"] = opt.seed;
  out["cd"] = mm.cd;
  out["precision"] = mm.precision;
  out["recall"] = mm.recall;
  out["f1"] = mm.f1;

  if (!opt.pred_maps.empty() && !opt.gt_maps.empty()) {
    double sum_abs_rel = 0, sum_abs_diff = 0;
    double sum_deg = 0, sum_lt30 = 0;
    std::size_t depth_px = 0, normal_px = 0;
    int evaluated = 0;
    for (int i = 0;; ++i) {
      const fs::path pd = fs::path(opt.pred_maps) / index_name("depth", i, "pfm");
      const fs::path gd = fs::path(opt.gt_maps) / index_name("depth", i, "pfm");
      if (!fs::exists(pd) || !fs::exists(gd)) break;
      const ImageGrid pred_d = io::read_pfm(pd.string());
      const ImageGrid gt_d = io::read_pfm(gd.string());
      if (!pred_d.same_shape(gt_d)) {
        throw io::SchemaError(pd.string() + ": size mismatch with GT");
      }
      ImageGrid mask(gt_d.height, gt_d.width, 1);
      std::size_t count = 0;
      for (std::size_t j = 0; j < mask.data.size(); ++j) {
        mask.data[j] = (gt_d.data[j] > 0 && pred_d.data[j] > 0) ? 1.0 : 0.0;
        count += mask.data[j] > 0;
      }
      if (count > 0) {
        const DepthMetrics dm = depth_metrics(pred_d, gt_d, mask);
        sum_abs_rel += dm.abs_rel * count;
        sum_abs_diff += dm.abs_diff * count;
        depth_px += count;
      }
      const fs::path pn = fs::path(opt.pred_maps) / index_name("normal", i, "pfm");
      const fs::path gn = fs::path(opt.gt_maps) / index_name("normal", i, "pfm");
      if (fs::exists(pn) && fs::exists(gn)) {
        const ImageGrid pred_n = io::read_pfm(pn.string());
        const ImageGrid gt_n = io::read_pfm(gn.string());
        ImageGrid nmask(gt_n.height, gt_n.width, 1);
        std::size_t ncount = 0;
        for (std::size_t j = 0; j < nmask.pixel_count(); ++j) {
          const auto len = [&](const ImageGrid& g) {
            return Vec3(g.data[3 * j], g.data[3 * j + 1], g.data[3 * j + 2])
                .norm();
          };
          nmask.data[j] =
              (mask.data[j] > 0 && len(pred_n) > 0.5 && len(gt_n) > 0.5) ? 1.0
                                                                         : 0.0;
          ncount += nmask.data[j] > 0;
        }
        if (ncount > 0) {
          const NormalMetrics nm = normal_metrics(pred_n, gt_n, nmask);
          sum_deg += nm.mean_deg * ncount;
          sum_lt30 += nm.frac_lt30 * ncount;
          normal_px += ncount;
        }
      }
      ++evaluated;
    }
    out["views_evaluated"] = evaluated;
    if (depth_px > 0) {
      out["abs_rel"] = sum_abs_rel / depth_px;
      out["abs_diff"] = sum_abs_diff / depth_px;
    }
    if (normal_px > 0) {
      out["normal_mean_deg"] = sum_deg / normal_px;
      out["normal_frac_lt30"] = sum_lt30 / normal_px;
    }
  }
  write_json(opt.out, out);
  return 0;
}

int cmd_render(const RenderOptions& opt) {
  if (opt.out.empty()) throw std::invalid_argument("render: --out is required");
  const SplatField field = io::read_splats_ply(opt.splats);
  const auto cameras = io::read_cameras_json(opt.cameras);
  if (opt.index < 0 || opt.index >= static_cast<int>(cameras.size())) {
    throw io::SchemaError(opt.cameras + ": camera index " +
                          std::to_string(opt.index) + " out of range");
  }
  const io::CameraRecord& cam = cameras[opt.index];
  View view;
  view.intrinsics = cam.intrinsics;
  view.pose = cam.pose;
  view.near = cam.near;
  view.far = cam.far;
  view.image = ImageGrid(cam.intrinsics.height, cam.intrinsics.width, 3);

  const RenderOutput r = render(field, view);
  io::write_png(opt.out + ".png", r.rgb);
  io::write_pfm(opt.out + "_depth.pfm", r.depth);
  io::write_pfm(opt.out + "_normal.pfm", r.normal);
  return 0;
}

int cmd_gradcheck(const GradcheckOptions& opt) {
  GradCheckConfig cfg;
  cfg.seed = opt.seed;
  cfg.instances = opt.instances;
  cfg.tol = opt.tol;
  const auto reports = run_gradient_suite(cfg);
  for (const auto& r : reports) {
    std::printf("%-18s max_rel_err %.3e over %d instances: %s\n",
                r.param_class.c_str(), r.max_rel_err, r.instances,
                r.pass ? "pass" : "FAIL");
  }
  const bool ok = all_passed(reports);
  std::printf("gradcheck: %s\n", ok ? "all classes passed" : "FAILURES above");
  return ok ? 0 : 1;
}

}  // namespace surfrec::cli
