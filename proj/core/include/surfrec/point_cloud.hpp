// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "surfrec/geometry.hpp"

namespace surfrec {

/// Point set with optional per-point weights in [0,1] (confidence).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> weights;  // empty, or aligned 1:1 with points

  bool has_weights() const { return !weights.empty(); }
  std::size_t size() const { return points.size(); }
  void validate() const;
};

}  // namespace surfrec
