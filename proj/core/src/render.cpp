// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace surfrec {

namespace {

constexpr double kDenEps = 1e-12;    // grazing-ray rejection on n.d
constexpr double kMinHit = 1e-9;     // hits closer than this are dropped
constexpr double kMaxRho = 120.0;    // squared Mahalanobis cutoff, exp ~ 9e-27
constexpr double kMinTransmit = 1e-14;

struct SplatPrep {
  Vec3 mu;
  Vec3 a1, a2, nw;  // rotated tangent axes and normal, world frame
  Vec3 ncam;        // normal in camera frame, unflipped
  double s1 = 0, s2 = 0;
  double alpha = 0;
  Vec3 color;
};

std::vector<SplatPrep> prepare_splats(const SplatField& field,
                                      const Mat3& r_w2c) {
  std::vector<SplatPrep> prep(field.splats.size());
  for (std::size_t i = 0; i < field.splats.size(); ++i) {
    const Splat2D& s = field.splats[i];
    SplatPrep& p = prep[i];
    const Mat3 r = s.q.normalized().toRotationMatrix();
    p.mu = s.mu;
    p.a1 = r.col(0);
    p.a2 = r.col(1);
    p.nw = r.col(2);
    p.ncam = r_w2c * p.nw;
    p.s1 = s.scale.x();
    p.s2 = s.scale.y();
    p.alpha = s.alpha;
    p.color = s.color;
  }
  return prep;
}

/// One blended sample along a pixel ray, with everything the adjoint needs.
struct Contribution {
  int id = 0;          // splat index
  double transmit = 0;  // transmittance before this sample
  double w = 0;        // clipped blend weight
  double t = 0;        // ray parameter = camera z of the hit
  double den = 0;      // n . d
  double u = 0, v = 0;
  double g = 0;
  double sign = 1;     // normal flip toward the camera
  bool clipped = false;
  Vec3 delta;          // hit point minus center, world frame
};

/// Walks the tile's candidates for one pixel ray, calling `emit` per blended
/// sample front to back. Returns (acc, depth_sum, normal_sum, rgb).
struct PixelBlend {
  double acc = 0;
  double depth_sum = 0;
  Vec3 normal_sum = Vec3::Zero();
  Vec3 rgb = Vec3::Zero();
  double median_depth = 0;
};

template <typename Emit>
PixelBlend blend_pixel(const std::vector<int>& candidates,
                       const std::vector<int>& order,
                       const std::vector<SplatPrep>& prep, const Vec3& origin,
                       const Vec3& dv, const RenderConfig& cfg, Emit&& emit) {
  PixelBlend px;
  double transmit = 1.0;
  bool median_set = false;
  for (int pos : candidates) {
    const SplatPrep& p = prep[order[pos]];
    const double den = p.nw.dot(dv);
    if (std::abs(den) < kDenEps) continue;
    const double t = p.nw.dot(p.mu - origin) / den;
    if (t <= kMinHit) continue;
    const Vec3 delta = (origin - p.mu) + t * dv;
    const double u = p.a1.dot(delta) / p.s1;
    const double v = p.a2.dot(delta) / p.s2;
    const double rho = u * u + v * v;
    if (rho > kMaxRho) continue;
    const double g = std::exp(-0.5 * rho);
    const double raw_w = p.alpha * g;
    const bool clipped = raw_w > cfg.weight_clip;
    const double w = clipped ? cfg.weight_clip : raw_w;
    const double omega = transmit * w;
    const double sign = den > 0 ? -1.0 : 1.0;

    px.rgb += omega * p.color;
    px.depth_sum += omega * t;
    px.normal_sum += omega * sign * p.ncam;
    px.acc += omega;
    if (!median_set && px.acc >= 0.5) {
      px.median_depth = t;
      median_set = true;
    }
    emit(Contribution{order[pos], transmit, w, t, den, u, v, g, sign, clipped,
                      delta});
    transmit *= 1.0 - w;
    if (transmit <= kMinTransmit) break;
  }
  return px;
}

void check_upstream(const ImageGrid& g, int height, int width, int channels,
                    const char* name) {
  if (g.pixel_count() == 0) return;
  if (g.height != height || g.width != width || g.channels != channels) {
    throw std::invalid_argument(std::string("render_backward: upstream ") +
                                name + " has mismatched shape");
  }
}

/// dL/d(raw q) from dL/d(columns of R(q_hat)), chained through the
/// normalization q_hat = q/|q|.
Eigen::Vector4d quat_backward(const Quat& q_raw, const Vec3& dc1,
                              const Vec3& dc2, const Vec3& dc3) {
  const Quat qn = q_raw.normalized();
  const double qw = qn.w(), qx = qn.x(), qy = qn.y(), qz = qn.z();

  Eigen::Vector4d dqh;
  dqh[0] = dc1.dot(Vec3(0, 2 * qz, -2 * qy)) +
           dc2.dot(Vec3(-2 * qz, 0, 2 * qx)) +
           dc3.dot(Vec3(2 * qy, -2 * qx, 0));
  dqh[1] = dc1.dot(Vec3(0, 2 * qy, 2 * qz)) +
           dc2.dot(Vec3(2 * qy, -4 * qx, 2 * qw)) +
           dc3.dot(Vec3(2 * qz, -2 * qw, -4 * qx));
  dqh[2] = dc1.dot(Vec3(-4 * qy, 2 * qx, -2 * qw)) +
           dc2.dot(Vec3(2 * qx, 0, 2 * qz)) +
           dc3.dot(Vec3(2 * qw, 2 * qz, -4 * qy));
  dqh[3] = dc1.dot(Vec3(-4 * qz, 2 * qw, 2 * qx)) +
           dc2.dot(Vec3(-2 * qw, -4 * qz, 2 * qy)) +
           dc3.dot(Vec3(2 * qx, 2 * qy, 0));

  const Eigen::Vector4d qh(qw, qx, qy, qz);
  const double norm = q_raw.norm();
  return (dqh - qh * qh.dot(dqh)) / norm;
}

}  // namespace

CullResult cull_and_sort(const SplatField& field, const View& view,
                         const RenderConfig& cfg) {
  view.validate();
  field.validate();
  if (cfg.tile_size <= 0) {
    throw std::invalid_argument("cull_and_sort: tile_size must be positive");
  }

  const CameraIntrinsics& intr = view.intrinsics;
  const Mat3 r = view.pose.rotation();
  const Vec3 t = view.pose.t;

  CullResult out;
  out.tiles_x = (intr.width + cfg.tile_size - 1) / cfg.tile_size;
  out.tiles_y = (intr.height + cfg.tile_size - 1) / cfg.tile_size;
  out.tiles.assign(static_cast<std::size_t>(out.tiles_x) * out.tiles_y, {});

  struct Survivor {
    int id;
    double z;
    int x0, x1, y0, y1;  // pixel bounding box, inclusive
  };
  std::vector<Survivor> alive;
  alive.reserve(field.splats.size());

  for (std::size_t i = 0; i < field.splats.size(); ++i) {
    const Splat2D& s = field.splats[i];
    const Vec3 pc = r * s.mu + t;
    const double rmax = cfg.margin_sigma * std::max(s.scale.x(), s.scale.y());
    if (pc.z() + rmax < view.near || pc.z() - rmax > view.far) continue;

    Survivor sv;
    sv.id = static_cast<int>(i);
    sv.z = pc.z();
    const double z_near = pc.z() - rmax;
    if (z_near <= 1e-3) {
      sv.x0 = 0;
      sv.x1 = intr.width - 1;
      sv.y0 = 0;
      sv.y1 = intr.height - 1;
    } else {
      const double px = intr.fx * pc.x() / pc.z() + intr.cx;
      const double py = intr.fy * pc.y() / pc.z() + intr.cy;
      const double rx =
          intr.fx * rmax / z_near * (1.0 + std::abs(pc.x() / pc.z())) + 1.0;
      const double ry =
          intr.fy * rmax / z_near * (1.0 + std::abs(pc.y() / pc.z())) + 1.0;
      sv.x0 = std::max(0, static_cast<int>(std::floor(px - rx)));
      sv.x1 = std::min(intr.width - 1, static_cast<int>(std::ceil(px + rx)));
      sv.y0 = std::max(0, static_cast<int>(std::floor(py - ry)));
      sv.y1 = std::min(intr.height - 1, static_cast<int>(std::ceil(py + ry)));
      if (sv.x0 > sv.x1 || sv.y0 > sv.y1) continue;
    }
    alive.push_back(sv);
  }

  std::sort(alive.begin(), alive.end(), [](const Survivor& a, const Survivor& b) {
    return a.z != b.z ? a.z < b.z : a.id < b.id;
  });

  out.order.reserve(alive.size());
  out.depths.reserve(alive.size());
  for (std::size_t pos = 0; pos < alive.size(); ++pos) {
    const Survivor& sv = alive[pos];
    out.order.push_back(sv.id);
    out.depths.push_back(sv.z);
    const int tx0 = sv.x0 / cfg.tile_size, tx1 = sv.x1 / cfg.tile_size;
    const int ty0 = sv.y0 / cfg.tile_size, ty1 = sv.y1 / cfg.tile_size;
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        out.tiles[static_cast<std::size_t>(ty) * out.tiles_x + tx].push_back(
            static_cast<int>(pos));
      }
    }
  }
  return out;
}

RenderOutput render(const SplatField& field, const View& view,
                    const RenderConfig& cfg) {
  const CullResult cull = cull_and_sort(field, view, cfg);
  const CameraIntrinsics& intr = view.intrinsics;
  const Mat3 r_w2c = view.pose.rotation();
  const Mat3 r_c2w = r_w2c.transpose();
  const Vec3 origin = view.pose.camera_center();
  const std::vector<SplatPrep> prep = prepare_splats(field, r_w2c);

  RenderOutput out;
  out.rgb = ImageGrid(intr.height, intr.width, 3);
  out.depth = ImageGrid(intr.height, intr.width, 1);
  out.normal = ImageGrid(intr.height, intr.width, 3);
  out.acc = ImageGrid(intr.height, intr.width, 1);

  for (int ty = 0; ty < cull.tiles_y; ++ty) {
    for (int tx = 0; tx < cull.tiles_x; ++tx) {
      const std::vector<int>& cand =
          cull.tiles[static_cast<std::size_t>(ty) * cull.tiles_x + tx];
      if (cand.empty()) continue;
      const int y1 = std::min(intr.height, (ty + 1) * cfg.tile_size);
      const int x1 = std::min(intr.width, (tx + 1) * cfg.tile_size);
      for (int y = ty * cfg.tile_size; y < y1; ++y) {
        for (int x = tx * cfg.tile_size; x < x1; ++x) {
          const Vec3 dc((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
          const Vec3 dv = r_c2w * dc;
          const PixelBlend px = blend_pixel(cand, cull.order, prep, origin, dv,
                                            cfg, [](const Contribution&) {});
          const double den_acc = std::max(px.acc, cfg.acc_floor);
          for (int c = 0; c < 3; ++c) out.rgb.at(y, x, c) = px.rgb[c];
          out.depth.at(y, x) =
              cfg.median_depth ? px.median_depth : px.depth_sum / den_acc;
          for (int c = 0; c < 3; ++c) {
            out.normal.at(y, x, c) = px.normal_sum[c] / den_acc;
          }
          out.acc.at(y, x) = px.acc;
        }
      }
    }
  }
  return out;
}

RenderGradients render_backward(const SplatField& field, const View& view,
                                const RenderConfig& cfg,
                                const RenderUpstream& upstream) {
  if (cfg.median_depth) {
    throw std::invalid_argument(
        "render_backward: median depth mode has no defined adjoint");
  }
  const CullResult cull = cull_and_sort(field, view, cfg);
  const CameraIntrinsics& intr = view.intrinsics;
  check_upstream(upstream.rgb, intr.height, intr.width, 3, "rgb");
  check_upstream(upstream.depth, intr.height, intr.width, 1, "depth");
  check_upstream(upstream.normal, intr.height, intr.width, 3, "normal");
  check_upstream(upstream.acc, intr.height, intr.width, 1, "acc");

  const Mat3 r_w2c = view.pose.rotation();
  const Mat3 r_c2w = r_w2c.transpose();
  const Vec3 origin = view.pose.camera_center();
  const std::vector<SplatPrep> prep = prepare_splats(field, r_w2c);

  const std::size_t n = field.splats.size();
  RenderGradients grads;
  grads.mu.assign(n, Vec3::Zero());
  grads.scale.assign(n, Eigen::Vector2d::Zero());
  grads.q.assign(n, Eigen::Vector4d::Zero());
  grads.alpha.assign(n, 0.0);
  grads.color.assign(n, Vec3::Zero());
  std::vector<Vec3> da1(n, Vec3::Zero());
  std::vector<Vec3> da2(n, Vec3::Zero());
  std::vector<Vec3> da3(n, Vec3::Zero());

  const bool has_rgb = upstream.rgb.pixel_count() > 0;
  const bool has_depth = upstream.depth.pixel_count() > 0;
  const bool has_normal = upstream.normal.pixel_count() > 0;
  const bool has_acc = upstream.acc.pixel_count() > 0;

  std::vector<Contribution> contribs;
  contribs.reserve(128);

  for (int ty = 0; ty < cull.tiles_y; ++ty) {
    for (int tx = 0; tx < cull.tiles_x; ++tx) {
      const std::vector<int>& cand =
          cull.tiles[static_cast<std::size_t>(ty) * cull.tiles_x + tx];
      if (cand.empty()) continue;
      const int y1 = std::min(intr.height, (ty + 1) * cfg.tile_size);
      const int x1 = std::min(intr.width, (tx + 1) * cfg.tile_size);
      for (int y = ty * cfg.tile_size; y < y1; ++y) {
        for (int x = tx * cfg.tile_size; x < x1; ++x) {
          Vec3 up_rgb = Vec3::Zero();
          Vec3 up_n = Vec3::Zero();
          double up_d = 0, up_a = 0;
          if (has_rgb) {
            up_rgb = Vec3(upstream.rgb.at(y, x, 0), upstream.rgb.at(y, x, 1),
                          upstream.rgb.at(y, x, 2));
          }
          if (has_depth) up_d = upstream.depth.at(y, x);
          if (has_normal) {
            up_n = Vec3(upstream.normal.at(y, x, 0), upstream.normal.at(y, x, 1),
                        upstream.normal.at(y, x, 2));
          }
          if (has_acc) up_a = upstream.acc.at(y, x);
          if (up_rgb.isZero() && up_n.isZero() && up_d == 0 && up_a == 0) {
            continue;
          }

          const Vec3 dc((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
          const Vec3 dv = r_c2w * dc;
          contribs.clear();
          const PixelBlend px =
              blend_pixel(cand, cull.order, prep, origin, dv, cfg,
                          [&](const Contribution& c) { contribs.push_back(c); });
          if (contribs.empty()) continue;

          const double den_acc = std::max(px.acc, cfg.acc_floor);
          const double ud_n = up_d / den_acc;
          const Vec3 un_n = up_n / den_acc;
          double base = up_a;
          if (px.acc > cfg.acc_floor) {
            base -= (px.depth_sum * up_d + px.normal_sum.dot(up_n)) /
                    (px.acc * px.acc);
          }

          double suffix = 0.0;  // sum over later samples of omega * payload
          for (std::size_t k = contribs.size(); k-- > 0;) {
            const Contribution& c = contribs[k];
            const SplatPrep& p = prep[c.id];
            const double omega = c.transmit * c.w;
            const Vec3 n_used = c.sign * p.ncam;
            const double payload = up_rgb.dot(p.color) + ud_n * c.t +
                                   un_n.dot(n_used) + base;
            const double dw = c.transmit * payload - suffix / (1.0 - c.w);
            suffix += omega * payload;

            grads.color[c.id] += omega * up_rgb;
            const double dt_payload = omega * ud_n;
            const Vec3 dn_used = omega * un_n;

            Vec3 ddelta = Vec3::Zero();
            double dt_total = dt_payload;
            if (!c.clipped) {
              grads.alpha[c.id] += c.g * dw;
              const double dg = p.alpha * dw;
              const double drho = -0.5 * c.g * dg;
              const double du = 2.0 * c.u * drho;
              const double dvv = 2.0 * c.v * drho;
              da1[c.id] += (du / p.s1) * c.delta;
              da2[c.id] += (dvv / p.s2) * c.delta;
              ddelta = (du / p.s1) * p.a1 + (dvv / p.s2) * p.a2;
              grads.scale[c.id].x() -= (c.u / p.s1) * du;
              grads.scale[c.id].y() -= (c.v / p.s2) * dvv;
            }
            dt_total += ddelta.dot(dv);
            grads.mu[c.id] += -ddelta + (dt_total / c.den) * p.nw;
            da3[c.id] += (-dt_total / c.den) * c.delta +
                         c.sign * (r_c2w * dn_used);
          }
        }
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (da1[i].isZero() && da2[i].isZero() && da3[i].isZero()) continue;
    grads.q[i] += quat_backward(field.splats[i].q, da1[i], da2[i], da3[i]);
  }
  return grads;
}

}  // namespace surfrec
