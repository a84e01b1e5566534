// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "surfrec/geometry.hpp"

namespace surfrec {

/// Indexed triangle mesh. Face normals follow vertex winding
/// (counter-clockwise seen from the normal side).
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> vertex_normals;  // optional; empty or one per vertex

  bool empty() const { return faces.empty(); }
  void validate() const;  // index ranges, no zero-area faces

  Vec3 face_normal(int f) const;    // unit; (0,0,0) for degenerate faces
  double face_area(int f) const;
  Vec3 face_centroid(int f) const;
  double total_area() const;

  /// Drops vertices not referenced by any face, remapping indices.
  void compact();
};

}  // namespace surfrec
