// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "surfrec/rng.hpp"

namespace surfrec {

namespace {

double lattice_value(std::uint64_t seed, int ix, int iy, int iz) {
  return rng::uniform(seed, static_cast<std::uint64_t>(ix) + (1ULL << 32),
                      static_cast<std::uint64_t>(iy) + (1ULL << 32),
                      static_cast<std::uint64_t>(iz) + (1ULL << 32));
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Trilinear value noise in [0,1].
double value_noise(std::uint64_t seed, const Vec3& p) {
  const int ix = static_cast<int>(std::floor(p.x()));
  const int iy = static_cast<int>(std::floor(p.y()));
  const int iz = static_cast<int>(std::floor(p.z()));
  const double tx = smoothstep(p.x() - ix);
  const double ty = smoothstep(p.y() - iy);
  const double tz = smoothstep(p.z() - iz);
  double acc = 0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
        acc += w * lattice_value(seed, ix + dx, iy + dy, iz + dz);
      }
  return acc;
}

}  // namespace

Vec3 SceneTexture::color(const Vec3& p) const {
  if (flat_band_x && p.x() >= (*flat_band_x)[0] && p.x() <= (*flat_band_x)[1])
    return Vec3(0.5, 0.5, 0.5);
  Vec3 c;
  // Octaves spanning frequency*{3/8, 3/4, 3/2}: a smooth aperiodic field whose
  // detail is spread evenly across the scales the matching descriptor probes,
  // so every image window carries similar texture energy. Fine octaves get the
  // most weight because they localize correlation peaks.
  static constexpr double kOctaveFreq[3] = {0.375, 0.75, 1.5};
  static constexpr double kOctaveWeight[3] = {0.5, 0.7, 1.0};
  for (int ch = 0; ch < 3; ++ch) {
    double n = 0;
    for (int o = 0; o < 3; ++o) {
      const double f = frequency * kOctaveFreq[o];
      n += kOctaveWeight[o] *
           (value_noise(seed * 3 + ch + 101 * o, p * f) - 0.5);
    }
    const double stripes =
        0.5 + 0.5 * std::sin(2.0 * M_PI * frequency * 0.5 *
                             (p.x() + 0.7 * p.y() + 0.3 * p.z()) + ch);
    double v = 0.5 + 1.3 * n + stripe_weight * (stripes - 0.5);
    c[ch] = std::clamp(v, 0.0, 1.0);
  }
  return c;
}

void SceneSpec::validate() const {
  if (!(dims.x() > 0 && dims.y() > 0 && dims.z() > 0))
    throw std::invalid_argument("scene: dimensions must be positive");
  if (!(texture.frequency > 0))
    throw std::invalid_argument("scene: texture frequency must be positive");
  if (sphere_subdiv < 0 || sphere_subdiv > 7)
    throw std::invalid_argument("scene: sphere_subdiv out of range [0,7]");
}

namespace {

// Planar quads are emitted as vertex grids rather than two giant triangles:
// frustum culling keeps faces by centroid, so face extent bounds how far a
// kept mesh may spill outside the viewed region.
constexpr double kQuadCell = 0.25;

// Grid-tessellated parallelogram corner + u + v; face normal along u x v.
void add_quad_grid(TriangleMesh& m, const Vec3& corner, const Vec3& u,
                   const Vec3& v) {
  const int nu = std::max(1, static_cast<int>(std::lround(u.norm() / kQuadCell)));
  const int nv = std::max(1, static_cast<int>(std::lround(v.norm() / kQuadCell)));
  const int base = static_cast<int>(m.vertices.size());
  for (int j = 0; j <= nv; ++j)
    for (int i = 0; i <= nu; ++i)
      m.vertices.push_back(corner + u * (static_cast<double>(i) / nu) +
                           v * (static_cast<double>(j) / nv));
  auto at = [&](int i, int j) { return base + j * (nu + 1) + i; };
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nu; ++i) {
      m.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
      m.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
    }
}

TriangleMesh make_plane(const Vec3& dims) {
  TriangleMesh m;
  const double hx = dims.x() * 0.5, hy = dims.y() * 0.5;
  // u along +y, v along +x: normal toward -z (cameras there).
  add_quad_grid(m, Vec3(-hx, -hy, 0), Vec3(0, 2 * hy, 0), Vec3(2 * hx, 0, 0));
  return m;
}

TriangleMesh make_box_room(const Vec3& dims) {
  TriangleMesh m;
  const double hx = dims.x() * 0.5, hy = dims.y() * 0.5, hz = dims.z() * 0.5;
  const Vec3 ux(2 * hx, 0, 0), uy(0, 2 * hy, 0), uz(0, 0, 2 * hz);
  // Each wall wound so the normal points inward (a room seen from inside).
  add_quad_grid(m, Vec3(-hx, -hy, -hz), ux, uy);  // z = -hz, inward +z
  add_quad_grid(m, Vec3(-hx, -hy, +hz), uy, ux);  // z = +hz, inward -z
  add_quad_grid(m, Vec3(-hx, -hy, -hz), uz, ux);  // y = -hy, inward +y
  add_quad_grid(m, Vec3(-hx, +hy, -hz), ux, uz);  // y = +hy, inward -y
  add_quad_grid(m, Vec3(-hx, -hy, -hz), uy, uz);  // x = -hx, inward +x
  add_quad_grid(m, Vec3(+hx, -hy, -hz), uz, uy);  // x = +hx, inward -x
  return m;
}

TriangleMesh make_sphere_room(double radius, int subdiv) {
  // Icosphere; faces wound inward.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int it = 0; it < subdiv; ++it) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto found = midpoint.find(key);
      if (found != midpoint.end()) return found->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces.swap(next);
  }
  TriangleMesh m;
  m.vertices.reserve(verts.size());
  for (const auto& v : verts) m.vertices.push_back(v * radius);
  m.faces.reserve(faces.size());
  for (const auto& f : faces) m.faces.push_back({f[0], f[2], f[1]});  // flip inward
  return m;
}

}  // namespace

TriangleMesh make_scene(const SceneSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case SceneKind::textured_plane: return make_plane(spec.dims);
    case SceneKind::box_room: return make_box_room(spec.dims);
    case SceneKind::sphere_room: return make_sphere_room(spec.dims.x(), spec.sphere_subdiv);
  }
  throw std::logic_error("make_scene: unknown kind");
}

namespace {

// Moller-Trumbore with a direction of unit camera z, so the ray parameter is
// camera-space depth directly.
bool ray_triangle(const Vec3& o, const Vec3& d, const Vec3& v0, const Vec3& v1,
                  const Vec3& v2, double& t_out) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 pvec = d.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return false;
  const double inv = 1.0 / det;
  const Vec3 tvec = o - v0;
  const double u = tvec.dot(pvec) * inv;
  if (u < -1e-12 || u > 1 + 1e-12) return false;
  const Vec3 qvec = tvec.cross(e1);
  const double v = d.dot(qvec) * inv;
  if (v < -1e-12 || u + v > 1 + 1e-12) return false;
  const double t = e2.dot(qvec) * inv;
  if (t <= 1e-9) return false;
  t_out = t;
  return true;
}

}  // namespace

OracleRender raycast_render(const TriangleMesh& mesh, const View& view,
                            const SceneTexture& texture) {
  view.validate();
  const auto& K = view.intrinsics;
  const Mat3 R = view.pose.rotation();
  const Mat3 Rt = R.transpose();
  const Vec3 origin = view.pose.camera_center();

  OracleRender out;
  out.image = ImageGrid(K.height, K.width, 3);
  out.depth = ImageGrid(K.height, K.width, 1);
  out.normal = ImageGrid(K.height, K.width, 3);

  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x) {
      const Vec3 dir_cam((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Vec3 dir = Rt * dir_cam;
      double best_t = std::numeric_limits<double>::infinity();
      int best_f = -1;
      for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        double t;
        if (ray_triangle(origin, dir, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                         mesh.vertices[tri[2]], t) &&
            t < best_t) {
          best_t = t;
          best_f = static_cast<int>(f);
        }
      }
      if (best_f < 0 || best_t < view.near || best_t > view.far) continue;
      const Vec3 hit = origin + best_t * dir;
      Vec3 n_cam = R * mesh.face_normal(best_f);
      if (n_cam.dot(dir_cam) > 0) n_cam = -n_cam;  // face the viewer
      const Vec3 c = texture.color(hit);
      out.depth.at(y, x) = best_t;
      for (int ch = 0; ch < 3; ++ch) {
        out.image.at(y, x, ch) = c[ch];
        out.normal.at(y, x, ch) = n_cam[ch];
      }
    }
  return out;
}

OracleRender perturb_normals(const OracleRender& render, double sigma_deg,
                             std::uint64_t seed) {
  if (sigma_deg < 0) throw std::invalid_argument("perturb_normals: negative sigma");
  OracleRender out = render;
  if (sigma_deg == 0) return out;
  const double sigma = sigma_deg * M_PI / 180.0;
  const int W = render.normal.width;
  for (int y = 0; y < render.normal.height; ++y)
    for (int x = 0; x < W; ++x) {
      if (!(render.depth.at(y, x) > 0)) continue;
      const std::uint64_t px = static_cast<std::uint64_t>(y) * W + x;
      Vec3 n(render.normal.at(y, x, 0), render.normal.at(y, x, 1),
             render.normal.at(y, x, 2));
      const double angle = std::abs(sigma * rng::normal(seed, px, 0));
      // Tangential rotation axis gives exactly `angle` of angular deviation.
      const Vec3 ref = std::abs(n.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
      const Vec3 t1 = n.cross(ref).normalized();
      const Vec3 t2 = n.cross(t1);
      const double phi = 2.0 * M_PI * rng::uniform(seed, px, 1);
      const Vec3 axis = std::cos(phi) * t1 + std::sin(phi) * t2;
      n = Eigen::AngleAxisd(angle, axis) * n;
      n.normalize();
      for (int ch = 0; ch < 3; ++ch) out.normal.at(y, x, ch) = n[ch];
    }
  return out;
}

ImageGrid normals_from_depth(const ImageGrid& depth, const CameraIntrinsics& intr) {
  ImageGrid out(depth.height, depth.width, 3);
  auto cam_point = [&](int x, int y) {
    const double d = depth.at(y, x);
    return Vec3((x - intr.cx) / intr.fx * d, (y - intr.cy) / intr.fy * d, d);
  };
  for (int y = 1; y + 1 < depth.height; ++y)
    for (int x = 1; x + 1 < depth.width; ++x) {
      if (!(depth.at(y, x) > 0) || !(depth.at(y, x - 1) > 0) ||
          !(depth.at(y, x + 1) > 0) || !(depth.at(y - 1, x) > 0) ||
          !(depth.at(y + 1, x) > 0))
        continue;
      const Vec3 dx = cam_point(x + 1, y) - cam_point(x - 1, y);
      const Vec3 dy = cam_point(x, y + 1) - cam_point(x, y - 1);
      Vec3 n = dx.cross(dy);
      const double l = n.norm();
      if (l < 1e-15) continue;
      n /= l;
      if (n.dot(cam_point(x, y)) > 0) n = -n;  // face the viewer
      for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = n[ch];
    }
  return out;
}

std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::textured_plane: return "plane";
    case SceneKind::box_room: return "box";
    case SceneKind::sphere_room: return "sphere";
  }
  return "?";
}

SceneKind scene_kind_from_string(const std::string& s) {
  if (s == "plane" || s == "textured_plane") return SceneKind::textured_plane;
  if (s == "box" || s == "box_room") return SceneKind::box_room;
  if (s == "sphere" || s == "sphere_room") return SceneKind::sphere_room;
  throw std::invalid_argument("unknown scene kind: " + s);
}

}  // namespace surfrec
