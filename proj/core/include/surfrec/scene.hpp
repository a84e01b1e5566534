// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "surfrec/mesh.hpp"

namespace surfrec {

/// Deterministic solid texture: value noise plus angled stripes, evaluated
/// directly at world positions. `flat_band_x` marks a world-x slab rendered
/// as constant gray to create a deliberately texture-free region.
struct SceneTexture {
  double frequency = 8.0;
  double stripe_weight = 0.15;
  std::uint64_t seed = 0;
  std::optional<std::array<double, 2>> flat_band_x;

  Vec3 color(const Vec3& p) const;
};

enum class SceneKind { textured_plane, box_room, sphere_room };

/// Analytic scene generator parameters. Geometry per kind:
///   textured_plane: quad at z=0 spanning dims.x() by dims.y()
///   box_room:       axis-aligned box centered at origin, inward normals
///   sphere_room:    icosphere of radius dims.x(), inward normals
struct SceneSpec {
  SceneKind kind = SceneKind::textured_plane;
  Vec3 dims = Vec3(2, 2, 2);
  SceneTexture texture;
  std::uint64_t seed = 0;
  int sphere_subdiv = 4;

  void validate() const;
};

TriangleMesh make_scene(const SceneSpec& spec);

/// Exact per-pixel ray cast of a view against a mesh.
/// depth: camera-space z, 0 on miss (or outside [near,far]).
/// normal: camera-frame geometric face normal, oriented toward the camera.
struct OracleRender {
  ImageGrid image;   // 3ch in [0,1]
  ImageGrid depth;   // 1ch
  ImageGrid normal;  // 3ch
};

OracleRender raycast_render(const TriangleMesh& mesh, const View& view,
                            const SceneTexture& texture);

/// Rotates each valid normal by a random tangential axis with folded-normal
/// angle of scale sigma_deg. sigma_deg = 0 is the identity.
OracleRender perturb_normals(const OracleRender& render, double sigma_deg,
                             std::uint64_t seed);

/// Camera-frame normals from a depth map by central finite differences,
/// oriented toward the camera; zero where the 4-neighborhood is invalid.
ImageGrid normals_from_depth(const ImageGrid& depth, const CameraIntrinsics& intr);

std::string to_string(SceneKind k);
SceneKind scene_kind_from_string(const std::string& s);

}  // namespace surfrec
