// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "surfrec/rng.hpp"

namespace surfrec {

void FitConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("FitConfig: negative steps");
  if (!(lr_mu > 0 && lr_scale > 0 && lr_q > 0 && lr_alpha > 0 &&
        lr_color > 0 && lr_kappa > 0)) {
    throw std::invalid_argument("FitConfig: learning rates must be positive");
  }
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1) || !(eps > 0)) {
    throw std::invalid_argument("FitConfig: bad Adam constants");
  }
  weights.validate();
  sampling.validate();
  if (depth_bins < 2) {
    throw std::invalid_argument("FitConfig: need at least two depth bins");
  }
  if (!(alpha0 > 0 && alpha0 < 1) || !(scale_mult > 0)) {
    throw std::invalid_argument("FitConfig: bad splat construction constants");
  }
  if (render.median_depth) {
    throw std::invalid_argument("FitConfig: median depth is not differentiable");
  }
}

std::string loss_trace_csv(const FitReport& report) {
  std::string out = "step,pho,wcd,normal,total\n";
  char buf[256];
  for (std::size_t i = 0; i < report.trace.size(); ++i) {
    const FitStep& s = report.trace[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", i, s.pho,
                  s.wcd, s.normal, s.total);
    out += buf;
  }
  return out;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               std::vector<double>& m, std::vector<double>& v, double lr,
               double beta1, double beta2, double eps, int t) {
  if (grads.size() != params.size() || m.size() != params.size() ||
      v.size() != params.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  if (t < 1) throw std::invalid_argument("adam_step: step index starts at 1");
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

ForwardResult forward_reconstruct(const View& view1, const View& view2,
                                  const ImageGrid& normals1,
                                  const ImageGrid& normals2,
                                  const FitConfig& cfg) {
  cfg.validate();
  view1.validate();
  view2.validate();
  const auto check_normals = [](const ImageGrid& n, const View& v,
                                const char* name) {
    if (n.channels != 3 || n.height != v.intrinsics.height ||
        n.width != v.intrinsics.width) {
      throw std::invalid_argument(std::string("forward_reconstruct: ") + name +
                                  " normal map shape mismatch");
    }
  };
  check_normals(normals1, view1, "view1");
  check_normals(normals2, view2, "view2");

  ForwardResult out;
  out.degenerate_baseline =
      (view1.pose.camera_center() - view2.pose.camera_center()).norm() < 1e-8;

  const FeatureMap f1 = extract_features(view1.image);
  const FeatureMap f2 = extract_features(view2.image);
  out.candidates1 =
      make_candidates(view1.near, view1.far, cfg.depth_bins, cfg.spacing);
  out.candidates2 =
      make_candidates(view2.near, view2.far, cfg.depth_bins, cfg.spacing);

  {
    const CostVolume cv1 =
        build_cost_volume(f1, f2, view1, view2, out.candidates1);
    out.coarse_depth1 = softmax_depth(cv1);
    out.confidence1 = confidence_map(cv1);
  }
  {
    const CostVolume cv2 =
        build_cost_volume(f2, f1, view2, view1, out.candidates2);
    out.coarse_depth2 = softmax_depth(cv2);
    out.confidence2 = confidence_map(cv2);
  }
  out.depth_full1 = upsample_bilinear(out.coarse_depth1, kFeatureStride);
  out.depth_full2 = upsample_bilinear(out.coarse_depth2, kFeatureStride);
  out.confidence_full1 = upsample_bilinear(out.confidence1.grid, kFeatureStride);
  out.confidence_full2 = upsample_bilinear(out.confidence2.grid, kFeatureStride);

  std::vector<int> pix1, pix2;
  std::vector<Splat2D> s1 = build_pixel_aligned(
      out.depth_full1, normals1, view1, cfg.alpha0, cfg.scale_mult, &pix1);
  std::vector<Splat2D> s2 = build_pixel_aligned(
      out.depth_full2, normals2, view2, cfg.alpha0, cfg.scale_mult, &pix2);
  out.field.splats = std::move(s1);
  out.field.splats.insert(out.field.splats.end(), s2.begin(), s2.end());
  out.field.provenance.reserve(out.field.splats.size());
  for (int p : pix1) out.field.provenance.push_back({0, p});
  for (int p : pix2) out.field.provenance.push_back({1, p});
  out.field.validate();
  return out;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kKappaFloor = 1e-4;
constexpr double kRenormFloor = 1e-8;

ImageGrid renormalize(const ImageGrid& v) {
  ImageGrid out(v.height, v.width, 3);
  for (std::size_t i = 0; i < v.pixel_count(); ++i) {
    const Vec3 p(v.data[3 * i], v.data[3 * i + 1], v.data[3 * i + 2]);
    const Vec3 n = p / std::max(p.norm(), kRenormFloor);
    for (int c = 0; c < 3; ++c) out.data[3 * i + c] = n[c];
  }
  return out;
}

/// Adjoint of renormalize at input `v` (with `n` the forward output).
ImageGrid renormalize_backward(const ImageGrid& v, const ImageGrid& n,
                               const ImageGrid& dn) {
  ImageGrid out(v.height, v.width, 3);
  for (std::size_t i = 0; i < v.pixel_count(); ++i) {
    const Vec3 p(v.data[3 * i], v.data[3 * i + 1], v.data[3 * i + 2]);
    const Vec3 nn(n.data[3 * i], n.data[3 * i + 1], n.data[3 * i + 2]);
    const Vec3 g(dn.data[3 * i], dn.data[3 * i + 1], dn.data[3 * i + 2]);
    const double len = p.norm();
    Vec3 dv;
    if (len > kRenormFloor) {
      dv = (g - nn * nn.dot(g)) / len;
    } else {
      dv = g / kRenormFloor;
    }
    for (int c = 0; c < 3; ++c) out.data[3 * i + c] = dv[c];
  }
  return out;
}

/// Adjoint of area downsampling: spread each coarse gradient uniformly.
void downsample_adjoint_add(ImageGrid& dst, const ImageGrid& coarse_grad,
                            int factor, double scale) {
  const double k = scale / (factor * factor);
  for (int y = 0; y < dst.height; ++y) {
    for (int x = 0; x < dst.width; ++x) {
      for (int c = 0; c < dst.channels; ++c) {
        dst.at(y, x, c) += k * coarse_grad.at(y / factor, x / factor, c);
      }
    }
  }
}

struct FlatGrads {
  std::vector<double> mu, scale, q, alpha, color, rho;
  void zero() {
    std::fill(mu.begin(), mu.end(), 0.0);
    std::fill(scale.begin(), scale.end(), 0.0);
    std::fill(q.begin(), q.end(), 0.0);
    std::fill(alpha.begin(), alpha.end(), 0.0);
    std::fill(color.begin(), color.end(), 0.0);
    std::fill(rho.begin(), rho.end(), 0.0);
  }
};

void pack_field(const SplatField& field, FlatGrads& p) {
  const std::size_t n = field.splats.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Splat2D& s = field.splats[i];
    for (int k = 0; k < 3; ++k) p.mu[3 * i + k] = s.mu[k];
    p.scale[2 * i] = s.scale.x();
    p.scale[2 * i + 1] = s.scale.y();
    p.q[4 * i] = s.q.w();
    p.q[4 * i + 1] = s.q.x();
    p.q[4 * i + 2] = s.q.y();
    p.q[4 * i + 3] = s.q.z();
    p.alpha[i] = s.alpha;
    for (int k = 0; k < 3; ++k) p.color[3 * i + k] = s.color[k];
  }
}

void unpack_and_project(const FlatGrads& p, SplatField& field) {
  const std::size_t n = field.splats.size();
  for (std::size_t i = 0; i < n; ++i) {
    Splat2D& s = field.splats[i];
    for (int k = 0; k < 3; ++k) s.mu[k] = p.mu[3 * i + k];
    s.scale.x() = std::max(p.scale[2 * i], 1e-6);
    s.scale.y() = std::max(p.scale[2 * i + 1], 1e-6);
    Quat q(p.q[4 * i], p.q[4 * i + 1], p.q[4 * i + 2], p.q[4 * i + 3]);
    const double qn = q.norm();
    s.q = qn > 1e-12 ? Quat(q.coeffs() / qn) : Quat::Identity();
    s.alpha = std::clamp(p.alpha[i], 1e-4, 1.0 - 1e-4);
    for (int k = 0; k < 3; ++k) {
      s.color[k] = std::clamp(p.color[3 * i + k], 0.0, 1.0);
    }
  }
}

}  // namespace

FitReport fit_field(SplatField field, const std::vector<View>& views,
                    const std::vector<ImageGrid>& pseudo_normals,
                    const std::vector<ImageGrid>& confidence_full,
                    const FitConfig& cfg, const View* held_out) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  field.validate();
  if (views.empty()) throw std::invalid_argument("fit: no views");
  for (const View& v : views) v.validate();
  const std::size_t n_views = views.size();
  const std::size_t n = field.splats.size();
  if (n == 0) throw std::invalid_argument("fit: empty field");

  const bool use_normal = cfg.weights.w3 > 0;
  const bool use_wcd = cfg.weights.w2 > 0;
  const bool use_pho = cfg.weights.w1 > 0;
  const bool has_held_out = held_out != nullptr && cfg.held_out_photometric;
  if (has_held_out) held_out->validate();

  if (use_normal) {
    if (pseudo_normals.size() != n_views) {
      throw std::invalid_argument("fit: pseudo-normal map per view required");
    }
    for (std::size_t v = 0; v < n_views; ++v) {
      if (pseudo_normals[v].channels != 3 ||
          pseudo_normals[v].height != views[v].intrinsics.height ||
          pseudo_normals[v].width != views[v].intrinsics.width) {
        throw std::invalid_argument("fit: pseudo-normal map shape mismatch");
      }
    }
  }
  if (!confidence_full.empty() && confidence_full.size() != n_views) {
    throw std::invalid_argument("fit: confidence map count mismatch");
  }

  // WCD point groups by provenance view.
  std::vector<std::vector<int>> group_ids;
  std::vector<std::vector<double>> group_weights;
  if (use_wcd) {
    if (n_views != 2 || field.provenance.size() != n) {
      throw std::invalid_argument(
          "fit: WCD needs two views and per-splat provenance");
    }
    group_ids.resize(2);
    group_weights.resize(2);
    for (std::size_t i = 0; i < n; ++i) {
      const SplatProvenance& pr = field.provenance[i];
      if (pr.view_index < 0 || pr.view_index >= 2) {
        throw std::invalid_argument("fit: provenance view out of range");
      }
      double w = 1.0;
      if (!confidence_full.empty()) {
        const ImageGrid& conf = confidence_full[pr.view_index];
        if (pr.pixel_index < 0 ||
            pr.pixel_index >= static_cast<int>(conf.pixel_count())) {
          throw std::invalid_argument("fit: provenance pixel out of range");
        }
        w = std::clamp(conf.data[pr.pixel_index], 0.0, 1.0);
      }
      group_ids[pr.view_index].push_back(static_cast<int>(i));
      group_weights[pr.view_index].push_back(w);
    }
    if (group_ids[0].empty() || group_ids[1].empty()) {
      throw std::invalid_argument("fit: WCD needs splats from both views");
    }
  }

  // Scene scale from mean splat depth in the provenance (or first) view.
  double scene_scale = 1.0;
  {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int vi = field.provenance.size() == n
                         ? std::clamp(field.provenance[i].view_index, 0,
                                      static_cast<int>(n_views) - 1)
                         : 0;
      const double z = views[vi].pose.to_camera(field.splats[i].mu).z();
      if (z > 0) {
        sum += z;
        ++cnt;
      }
    }
    if (cnt > 0 && sum > 0) scene_scale = sum / static_cast<double>(cnt);
  }

  // Multi-scale machinery for the normal term.
  const int factors[3] = {4, 2, 1};
  std::vector<std::vector<ImageGrid>> gt_scales(n_views);
  std::vector<std::vector<ImageGrid>> rho(n_views);  // kappa pre-activations
  std::vector<std::vector<std::size_t>> rho_offset(n_views);
  std::size_t rho_total = 0;
  const double rho0 = std::log(std::expm1(1.0 - kKappaFloor));
  if (use_normal) {
    for (std::size_t v = 0; v < n_views; ++v) {
      gt_scales[v].reserve(3);
      rho[v].reserve(3);
      rho_offset[v].reserve(3);
      for (int f : factors) {
        const ImageGrid base =
            f > 1 ? downsample(pseudo_normals[v], f) : pseudo_normals[v];
        gt_scales[v].push_back(renormalize(base));
        rho[v].emplace_back(views[v].intrinsics.height / f,
                            views[v].intrinsics.width / f, 1, rho0);
        rho_offset[v].push_back(rho_total);
        rho_total += rho[v].back().pixel_count();
      }
    }
  }

  FlatGrads params;
  params.mu.resize(3 * n);
  params.scale.resize(2 * n);
  params.q.resize(4 * n);
  params.alpha.resize(n);
  params.color.resize(3 * n);
  params.rho.resize(rho_total);
  pack_field(field, params);
  {
    std::size_t k = 0;
    for (std::size_t v = 0; v < n_views && use_normal; ++v) {
      for (const ImageGrid& g : rho[v]) {
        std::copy(g.data.begin(), g.data.end(), params.rho.begin() + k);
        k += g.data.size();
      }
    }
  }

  FlatGrads grads = params;
  FlatGrads m_state = params, v_state = params;
  grads.zero();
  m_state.zero();
  v_state.zero();

  const auto sync_rho_grids = [&] {
    if (!use_normal) return;
    std::size_t k = 0;
    for (std::size_t v = 0; v < n_views; ++v) {
      for (ImageGrid& g : rho[v]) {
        std::copy(params.rho.begin() + k, params.rho.begin() + k + g.data.size(),
                  g.data.begin());
        k += g.data.size();
      }
    }
  };

  FitReport report;
  report.trace.reserve(cfg.steps + 1);

  const auto evaluate = [&](int step, bool want_grads) -> FitStep {
    FitStep st;
    std::vector<RenderOutput> ro(n_views);
    for (std::size_t v = 0; v < n_views; ++v) {
      ro[v] = render(field, views[v], cfg.render);
    }
    std::vector<RenderUpstream> ups(n_views);
    const std::size_t n_pho = n_views + (has_held_out ? 1 : 0);

    RenderOutput ro_h;
    RenderUpstream up_h;
    if (has_held_out) ro_h = render(field, *held_out, cfg.render);

    if (use_pho) {
      for (std::size_t v = 0; v < n_views; ++v) {
        PhotometricResult ph = photometric(views[v].image, ro[v].rgb,
                                           cfg.weights.w11, cfg.weights.w12);
        st.pho += ph.value / static_cast<double>(n_pho);
        if (want_grads) {
          const double k = cfg.weights.w1 / static_cast<double>(n_pho);
          for (double& g : ph.grad.data) g *= k;
          ups[v].rgb = std::move(ph.grad);
        }
      }
      if (has_held_out) {
        PhotometricResult ph = photometric(held_out->image, ro_h.rgb,
                                           cfg.weights.w11, cfg.weights.w12);
        st.pho += ph.value / static_cast<double>(n_pho);
        if (want_grads) {
          const double k = cfg.weights.w1 / static_cast<double>(n_pho);
          for (double& g : ph.grad.data) g *= k;
          up_h.rgb = std::move(ph.grad);
        }
      }
    }

    if (use_normal) {
      for (std::size_t v = 0; v < n_views; ++v) {
        NormalPrediction pred;
        std::vector<ImageGrid> masks;
        std::vector<ImageGrid> bases;  // pre-normalization inputs, for adjoint
        for (int si = 0; si < 3; ++si) {
          const int f = factors[si];
          ImageGrid base = f > 1 ? downsample(ro[v].normal, f) : ro[v].normal;
          ImageGrid acc = f > 1 ? downsample(ro[v].acc, f) : ro[v].acc;
          NormalScale ns;
          ns.normal = renormalize(base);
          ns.kappa = rho[v][si];
          for (double& x : ns.kappa.data) {
            x = std::log1p(std::exp(x)) + kKappaFloor;
          }
          ImageGrid mask(acc.height, acc.width, 1);
          for (std::size_t i = 0; i < acc.pixel_count(); ++i) {
            mask.data[i] = acc.data[i] >= 0.5 ? 1.0 : 0.0;
          }
          bases.push_back(std::move(base));
          masks.push_back(std::move(mask));
          pred.scales.push_back(std::move(ns));
        }
        const NormalLossResult nl = normal_loss(
            pred, gt_scales[v], masks, cfg.sampling,
            rng::hash(cfg.seed, 0x6669746eULL, static_cast<std::uint64_t>(step),
                      static_cast<std::uint64_t>(v)));
        st.normal += nl.value / static_cast<double>(n_views);
        if (want_grads) {
          const double wn = cfg.weights.w3 / static_cast<double>(n_views);
          ImageGrid dfull(ro[v].normal.height, ro[v].normal.width, 3);
          for (int si = 0; si < 3; ++si) {
            const int f = factors[si];
            const ImageGrid dbase = renormalize_backward(
                bases[si], pred.scales[si].normal, nl.grad_normal[si]);
            if (f > 1) {
              downsample_adjoint_add(dfull, dbase, f, 1.0);
            } else {
              for (std::size_t i = 0; i < dfull.data.size(); ++i) {
                dfull.data[i] += dbase.data[i];
              }
            }
            double* gr = grads.rho.data() + rho_offset[v][si];
            const ImageGrid& rg = rho[v][si];
            for (std::size_t i = 0; i < rg.pixel_count(); ++i) {
              gr[i] += wn * nl.grad_kappa[si].data[i] * sigmoid(rg.data[i]);
            }
          }
          for (double& g : dfull.data) g *= wn;
          ups[v].normal = std::move(dfull);
        }
      }
    }

    if (use_wcd) {
      PointCloud a, b;
      a.points.reserve(group_ids[0].size());
      b.points.reserve(group_ids[1].size());
      for (int id : group_ids[0]) a.points.push_back(field.splats[id].mu);
      for (int id : group_ids[1]) b.points.push_back(field.splats[id].mu);
      a.weights = group_weights[0];
      b.weights = group_weights[1];
      const ChamferResult cr = weighted_chamfer(a, b);
      st.wcd = cr.value;
      if (want_grads) {
        for (std::size_t i = 0; i < group_ids[0].size(); ++i) {
          const int id = group_ids[0][i];
          for (int k = 0; k < 3; ++k) {
            grads.mu[3 * id + k] += cfg.weights.w2 * cr.grad_a[i][k];
          }
        }
        for (std::size_t i = 0; i < group_ids[1].size(); ++i) {
          const int id = group_ids[1][i];
          for (int k = 0; k < 3; ++k) {
            grads.mu[3 * id + k] += cfg.weights.w2 * cr.grad_b[i][k];
          }
        }
      }
    }

    st.total = total_loss(st.pho, st.wcd, st.normal, cfg.weights);
    if (!std::isfinite(st.total)) {
      throw std::runtime_error(
          "fit: non-finite total loss at step " + std::to_string(step) +
          " (pho=" + std::to_string(st.pho) + ", wcd=" + std::to_string(st.wcd) +
          ", normal=" + std::to_string(st.normal) + ")");
    }

    if (want_grads) {
      const auto accumulate = [&](const RenderGradients& rg) {
        for (std::size_t i = 0; i < n; ++i) {
          for (int k = 0; k < 3; ++k) grads.mu[3 * i + k] += rg.mu[i][k];
          grads.scale[2 * i] += rg.scale[i].x();
          grads.scale[2 * i + 1] += rg.scale[i].y();
          for (int k = 0; k < 4; ++k) grads.q[4 * i + k] += rg.q[i][k];
          grads.alpha[i] += rg.alpha[i];
          for (int k = 0; k < 3; ++k) grads.color[3 * i + k] += rg.color[i][k];
        }
      };
      for (std::size_t v = 0; v < n_views; ++v) {
        if (ups[v].rgb.pixel_count() == 0 && ups[v].normal.pixel_count() == 0) {
          continue;
        }
        accumulate(render_backward(field, views[v], cfg.render, ups[v]));
      }
      if (has_held_out && up_h.rgb.pixel_count() > 0) {
        accumulate(render_backward(field, *held_out, cfg.render, up_h));
      }
    }
    return st;
  };

  for (int step = 0; step < cfg.steps; ++step) {
    grads.zero();
    report.trace.push_back(evaluate(step, true));
    const int t = step + 1;
    adam_step(params.mu, grads.mu, m_state.mu, v_state.mu,
              cfg.lr_mu * scene_scale, cfg.beta1, cfg.beta2, cfg.eps, t);
    adam_step(params.scale, grads.scale, m_state.scale, v_state.scale,
              cfg.lr_scale, cfg.beta1, cfg.beta2, cfg.eps, t);
    adam_step(params.q, grads.q, m_state.q, v_state.q, cfg.lr_q, cfg.beta1,
              cfg.beta2, cfg.eps, t);
    adam_step(params.alpha, grads.alpha, m_state.alpha, v_state.alpha,
              cfg.lr_alpha, cfg.beta1, cfg.beta2, cfg.eps, t);
    adam_step(params.color, grads.color, m_state.color, v_state.color,
              cfg.lr_color, cfg.beta1, cfg.beta2, cfg.eps, t);
    if (rho_total > 0) {
      adam_step(params.rho, grads.rho, m_state.rho, v_state.rho, cfg.lr_kappa,
                cfg.beta1, cfg.beta2, cfg.eps, t);
    }
    unpack_and_project(params, field);
    pack_field(field, params);  // keep the flat view consistent with clamps
    sync_rho_grids();
  }
  report.trace.push_back(evaluate(cfg.steps, false));

  report.field = std::move(field);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

FitReport fit_scene(const View& view1, const View& view2,
                    const ImageGrid& normals1, const ImageGrid& normals2,
                    const FitConfig& cfg, const View* held_out) {
  ForwardResult fr = forward_reconstruct(view1, view2, normals1, normals2, cfg);
  FitReport report =
      fit_field(std::move(fr.field), {view1, view2}, {normals1, normals2},
                {fr.confidence_full1, fr.confidence_full2}, cfg, held_out);
  report.degenerate_baseline = fr.degenerate_baseline;
  return report;
}

}  // namespace surfrec
