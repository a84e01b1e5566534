// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "surfrec/geometry.hpp"
#include "surfrec/mesh.hpp"
#include "surfrec/splats.hpp"

namespace surfrec::io {

/// Malformed input file (bad header, missing field, wrong type). The CLI
/// maps this to its schema-error exit code; plain I/O failures throw
/// std::runtime_error with the path in the message.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- PFM (portable float map) ------------------------------------------------
// Header "PF" (3 channels) or "Pf" (1 channel), then "<width> <height>", then
// scale "-1" (negative marks little-endian), then raw float32 scanlines
// stored bottom-up. Values pass through a float32 cast, so
// write(read(x)) is byte-identical.

void write_pfm(const std::string& path, const ImageGrid& img);
ImageGrid read_pfm(const std::string& path);

// -- PNG ---------------------------------------------------------------------
// 8-bit; grayscale for 1-channel grids, RGB for 3-channel. Values are
// clamped to [0,1] and quantized to v*255 rounded to nearest.

void write_png(const std::string& path, const ImageGrid& img);
/// Returns a 3-channel grid in [0,1] (grayscale files are expanded).
ImageGrid read_png(const std::string& path);

// -- Triangle meshes ---------------------------------------------------------
// ASCII PLY (double precision, %.17g, exact roundtrip) and Wavefront OBJ.
// Readers accept float or double vertex properties and fan-triangulate
// larger faces.

void write_mesh_ply(const std::string& path, const TriangleMesh& mesh);
TriangleMesh read_mesh_ply(const std::string& path);
void write_mesh_obj(const std::string& path, const TriangleMesh& mesh);
TriangleMesh read_mesh_obj(const std::string& path);
/// Dispatches on the file extension (.ply or .obj, case-insensitive).
TriangleMesh read_mesh(const std::string& path);

// -- Splat fields ------------------------------------------------------------
// ASCII PLY, element "vertex" with double properties
// x y z s0 s1 qw qx qy qz alpha red green blue (%.17g, exact roundtrip).
// Provenance is not serialized; a reloaded field renders identically.

void write_splats_ply(const std::string& path, const SplatField& field);
SplatField read_splats_ply(const std::string& path);

// -- Cameras -----------------------------------------------------------------
// JSON file {"cameras": [...]}, one record per view:
//   fx fy cx cy (pixels), width height, quaternion [w,x,y,z] and
//   translation [x,y,z] of the world-to-camera transform, near, far.

struct CameraRecord {
  CameraIntrinsics intrinsics;
  CameraPose pose;
  double near = 0, far = 0;
};

void write_cameras_json(const std::string& path,
                        const std::vector<CameraRecord>& cameras);
std::vector<CameraRecord> read_cameras_json(const std::string& path);

}  // namespace surfrec::io
