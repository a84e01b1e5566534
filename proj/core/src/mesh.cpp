// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "surfrec/mesh.hpp"

#include <stdexcept>

namespace surfrec {

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& f : faces) {
    for (int i : f)
      if (i < 0 || i >= n) throw std::invalid_argument("mesh: face index out of range");
  }
  if (!vertex_normals.empty() && vertex_normals.size() != vertices.size())
    throw std::invalid_argument("mesh: normal count does not match vertices");
  for (std::size_t f = 0; f < faces.size(); ++f)
    if (!(face_area(static_cast<int>(f)) > 0))
      throw std::invalid_argument("mesh: zero-area face");
}

Vec3 TriangleMesh::face_normal(int f) const {
  const auto& t = faces[f];
  const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  const double l = n.norm();
  return l > 0 ? Vec3(n / l) : Vec3::Zero();
}

double TriangleMesh::face_area(int f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]])
                   .cross(vertices[t[2]] - vertices[t[0]])
                   .norm();
}

Vec3 TriangleMesh::face_centroid(int f) const {
  const auto& t = faces[f];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double TriangleMesh::total_area() const {
  double a = 0;
  for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(static_cast<int>(f));
  return a;
}

void TriangleMesh::compact() {
  std::vector<int> remap(vertices.size(), -1);
  std::vector<Vec3> nv;
  std::vector<Vec3> nn;
  for (auto& f : faces)
    for (int& i : f) {
      if (remap[i] < 0) {
        remap[i] = static_cast<int>(nv.size());
        nv.push_back(vertices[i]);
        if (!vertex_normals.empty()) nn.push_back(vertex_normals[i]);
      }
      i = remap[i];
    }
  vertices.swap(nv);
  vertex_normals.swap(nn);
}

}  // namespace surfrec
