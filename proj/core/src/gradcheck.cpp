// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "surfrec/losses.hpp"
#include "surfrec/render.hpp"
#include "surfrec/rng.hpp"

namespace surfrec {

void GradCheckConfig::validate() const {
  if (instances < 1) throw std::invalid_argument("gradcheck: instances < 1");
  if (!(tol > 0)) throw std::invalid_argument("gradcheck: tol must be > 0");
}

namespace {

/// Collects (analytic, finite-difference) pairs for one parameter class and
/// scores them relative to the class's dynamic range, so near-zero entries
/// are measured against the largest gradient rather than against themselves.
struct PairAccum {
  std::vector<std::pair<double, double>> pairs;
  void add(double analytic, double fd) { pairs.emplace_back(analytic, fd); }
  double max_rel_err() const {
    double scale = 0;
    for (const auto& [a, f] : pairs) {
      scale = std::max(scale, std::abs(a) + std::abs(f));
    }
    const double floor = std::max(1e-6 * scale, 1e-9);
    double worst = 0;
    for (const auto& [a, f] : pairs) {
      const double den = std::max(std::abs(a) + std::abs(f), floor);
      worst = std::max(worst, std::abs(a - f) / den);
    }
    return worst;
  }
};

double urand(std::uint64_t seed, std::uint64_t a, std::uint64_t b, double lo,
             double hi) {
  return lo + (hi - lo) * rng::uniform(seed, a, b);
}

Vec3 unit_vec(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  for (std::uint64_t k = 0;; ++k) {
    const Vec3 v(rng::normal(seed, a, b, 3 * k), rng::normal(seed, a, b, 3 * k + 1),
                 rng::normal(seed, a, b, 3 * k + 2));
    if (v.norm() > 1e-3) return v.normalized();
  }
}

// -- Rasterizer check --------------------------------------------------------

struct RenderInstance {
  SplatField field;
  View view;
  RenderUpstream up;
};

RenderInstance make_render_instance(std::uint64_t seed, std::uint64_t i) {
  RenderInstance inst;
  inst.view.intrinsics = {14.0, 14.0, 5.5, 5.5, 12, 12};
  inst.view.near = 0.1;
  inst.view.far = 50.0;
  inst.view.image = ImageGrid(12, 12, 3);

  const std::uint64_t s = rng::hash(seed, 0x72656e64ULL, i);
  const int n_splats = 7;
  for (int k = 0; k < n_splats; ++k) {
    const std::uint64_t sk = rng::hash(s, static_cast<std::uint64_t>(k));
    Splat2D sp;
    const double px = urand(sk, 1, 0, 2.0, 9.0);
    const double py = urand(sk, 1, 1, 2.0, 9.0);
    const double d = urand(sk, 1, 2, 2.0, 4.0);
    sp.mu = unproject(Vec2(px, py), d, inst.view.intrinsics, inst.view.pose);
    // Keep the disc within ~30 degrees of facing the camera so no ray in the
    // footprint grazes the splat plane.
    const Vec3 dir = sp.mu.normalized();
    const Vec3 n = (-dir + 0.5 * unit_vec(sk, 2, 0)).normalized();
    const Quat twist(Eigen::AngleAxisd(urand(sk, 3, 0, 0.0, 6.283), Vec3::UnitZ()));
    sp.q = normal_to_quat(n) * twist;
    if (rng::uniform(sk, 3, 1) < 0.5) sp.q.coeffs() = -sp.q.coeffs();
    const double footprint = d / inst.view.intrinsics.fx;
    sp.scale = {urand(sk, 4, 0, 1.0, 2.5) * footprint,
                urand(sk, 4, 1, 1.0, 2.5) * footprint};
    sp.alpha = urand(sk, 5, 0, 0.2, 0.85);
    sp.color = Vec3(urand(sk, 6, 0, 0.05, 0.95), urand(sk, 6, 1, 0.05, 0.95),
                    urand(sk, 6, 2, 0.05, 0.95));
    inst.field.splats.push_back(sp);
  }

  const auto fill = [&](ImageGrid& g, int ch, std::uint64_t tag) {
    g = ImageGrid(12, 12, ch);
    for (std::size_t j = 0; j < g.data.size(); ++j) {
      g.data[j] = urand(s, tag, j, -1.0, 1.0);
    }
  };
  fill(inst.up.rgb, 3, 10);
  fill(inst.up.depth, 1, 11);
  fill(inst.up.normal, 3, 12);
  fill(inst.up.acc, 1, 13);
  return inst;
}

double render_scalar_loss(const RenderInstance& inst) {
  const RenderOutput out = render(inst.field, inst.view);
  double loss = 0;
  for (std::size_t j = 0; j < out.rgb.data.size(); ++j) {
    loss += inst.up.rgb.data[j] * out.rgb.data[j];
  }
  for (std::size_t j = 0; j < out.depth.data.size(); ++j) {
    loss += inst.up.depth.data[j] * out.depth.data[j];
  }
  for (std::size_t j = 0; j < out.normal.data.size(); ++j) {
    loss += inst.up.normal.data[j] * out.normal.data[j];
  }
  for (std::size_t j = 0; j < out.acc.data.size(); ++j) {
    loss += inst.up.acc.data[j] * out.acc.data[j];
  }
  return loss;
}

void check_render(std::uint64_t seed, int instances, PairAccum accums[5]) {
  for (int i = 0; i < instances; ++i) {
    RenderInstance inst = make_render_instance(seed, i);
    const RenderGradients rg =
        render_backward(inst.field, inst.view, RenderConfig{}, inst.up);

    const auto fd = [&](double* slot, double h) {
      const double saved = *slot;
      *slot = saved + h;
      const double lp = render_scalar_loss(inst);
      *slot = saved - h;
      const double lm = render_scalar_loss(inst);
      *slot = saved;
      return (lp - lm) / (2.0 * h);
    };

    for (std::size_t k = 0; k < inst.field.splats.size(); ++k) {
      Splat2D& sp = inst.field.splats[k];
      for (int c = 0; c < 3; ++c) {
        accums[0].add(rg.mu[k][c], fd(&sp.mu[c], 2e-6));
      }
      for (int c = 0; c < 2; ++c) {
        accums[1].add(rg.scale[k][c], fd(&sp.scale[c], 1e-6 * sp.scale[c]));
      }
      for (int c = 0; c < 4; ++c) {
        accums[2].add(rg.q[k][c], fd(&sp.q.coeffs()[(c + 3) % 4], 1e-6));
      }
      accums[3].add(rg.alpha[k], fd(&sp.alpha, 1e-6));
      for (int c = 0; c < 3; ++c) {
        accums[4].add(rg.color[k][c], fd(&sp.color[c], 1e-6));
      }
    }
  }
}

// -- Chamfer checks ----------------------------------------------------------

PointCloud random_cloud(std::uint64_t seed, std::uint64_t tag, int n,
                        bool weighted) {
  PointCloud pc;
  for (int k = 0; k < n; ++k) {
    pc.points.emplace_back(urand(seed, tag, 3 * k, -1.0, 1.0),
                           urand(seed, tag, 3 * k + 1, -1.0, 1.0),
                           urand(seed, tag, 3 * k + 2, -1.0, 1.0));
  }
  if (weighted) {
    for (int k = 0; k < n; ++k) {
      pc.weights.push_back(rng::uniform(seed, tag + 1, k));
    }
  }
  return pc;
}

void check_chamfer(std::uint64_t seed, int instances, bool weighted,
                   PairAccum& accum) {
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t s =
        rng::hash(seed, weighted ? 0x77636400ULL : 0x63640000ULL, i);
    PointCloud a = random_cloud(s, 100, 12, weighted);
    PointCloud b = random_cloud(s, 200, 15, weighted);
    const ChamferResult res =
        weighted ? weighted_chamfer(a, b) : chamfer(a, b);

    const auto fd = [&](double* slot) {
      const double h = 1e-6;
      const double saved = *slot;
      *slot = saved + h;
      const double lp = (weighted ? weighted_chamfer(a, b) : chamfer(a, b)).value;
      *slot = saved - h;
      const double lm = (weighted ? weighted_chamfer(a, b) : chamfer(a, b)).value;
      *slot = saved;
      return (lp - lm) / (2.0 * h);
    };

    for (std::size_t k = 0; k < a.points.size(); ++k) {
      for (int c = 0; c < 3; ++c) {
        accum.add(res.grad_a[k][c], fd(&a.points[k][c]));
      }
    }
    for (std::size_t k = 0; k < b.points.size(); ++k) {
      for (int c = 0; c < 3; ++c) {
        accum.add(res.grad_b[k][c], fd(&b.points[k][c]));
      }
    }
  }
}

// -- AngMF check -------------------------------------------------------------

void check_angmf(std::uint64_t seed, int instances, PairAccum& accum) {
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t s = rng::hash(seed, 0x616e6766ULL, i);
    const Vec3 gt = unit_vec(s, 1, 0);
    // Stay away from theta = 0 and pi where acos is non-Lipschitz.
    const double theta = urand(s, 2, 0, 0.2, 2.9);
    Vec3 axis = unit_vec(s, 3, 0);
    axis = (axis - axis.dot(gt) * gt).normalized();
    const Vec3 n = Eigen::AngleAxisd(theta, axis) * gt;
    const double kappa = urand(s, 4, 0, 0.1, 10.0);

    const AngMfResult res = angmf_nll(n, kappa, gt);

    // Tangential directions: the normal lives on the unit sphere, so finite
    // differences walk along normalize(n + h*t).
    const Vec3 t1 = axis;
    const Vec3 t2 = n.cross(t1).normalized();
    const double h = 1e-6;
    for (const Vec3& t : {t1, t2}) {
      const Vec3 np = (n + h * t).normalized();
      const Vec3 nm = (n - h * t).normalized();
      const double fd =
          (angmf_nll(np, kappa, gt).value - angmf_nll(nm, kappa, gt).value) /
          (2.0 * h);
      accum.add(res.grad_n.dot(t), fd);
    }
    const double fk = (angmf_nll(n, kappa + h, gt).value -
                       angmf_nll(n, kappa - h, gt).value) /
                      (2.0 * h);
    accum.add(res.grad_kappa, fk);
  }
}

// -- Photometric check -------------------------------------------------------

void check_photometric(std::uint64_t seed, int instances, PairAccum& accum) {
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t s = rng::hash(seed, 0x70686f74ULL, i);
    ImageGrid target(16, 16, 3), pred(16, 16, 3);
    for (std::size_t j = 0; j < target.data.size(); ++j) {
      target.data[j] = rng::uniform(s, 1, j);
      pred.data[j] =
          std::clamp(target.data[j] + 0.3 * (rng::uniform(s, 2, j) - 0.5), 0.05,
                     0.95);
    }
    const PhotometricResult res = photometric(target, pred);
    const double h = 1e-5;
    for (std::size_t j = 0; j < pred.data.size(); ++j) {
      const double saved = pred.data[j];
      pred.data[j] = saved + h;
      const double lp = photometric(target, pred).value;
      pred.data[j] = saved - h;
      const double lm = photometric(target, pred).value;
      pred.data[j] = saved;
      accum.add(res.grad.data[j], (lp - lm) / (2.0 * h));
    }
  }
}

}  // namespace

std::vector<GradCheckReport> run_gradient_suite(const GradCheckConfig& cfg) {
  cfg.validate();
  PairAccum render_acc[5];
  PairAccum cd_acc, wcd_acc, angmf_acc, pho_acc;

  check_render(cfg.seed, cfg.instances, render_acc);
  check_chamfer(cfg.seed, cfg.instances, false, cd_acc);
  check_chamfer(cfg.seed, cfg.instances, true, wcd_acc);
  check_angmf(cfg.seed, cfg.instances, angmf_acc);
  check_photometric(cfg.seed, cfg.instances, pho_acc);

  const char* render_names[5] = {"render.mu", "render.scale", "render.q",
                                 "render.alpha", "render.color"};
  std::vector<GradCheckReport> reports;
  const auto emit = [&](const std::string& name, const PairAccum& acc) {
    GradCheckReport r;
    r.param_class = name;
    r.max_rel_err = acc.max_rel_err();
    r.instances = cfg.instances;
    r.pass = r.max_rel_err <= cfg.tol;
    reports.push_back(std::move(r));
  };
  for (int k = 0; k < 5; ++k) emit(render_names[k], render_acc[k]);
  emit("chamfer", cd_acc);
  emit("weighted_chamfer", wcd_acc);
  emit("angmf_nll", angmf_acc);
  emit("photometric", pho_acc);
  return reports;
}

bool all_passed(const std::vector<GradCheckReport>& reports) {
  for (const auto& r : reports) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace surfrec
