// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "surfrec/geometry.hpp"

namespace surfrec {

/// Static balanced kd-tree over 3D points for exact nearest-neighbor queries.
/// Ties in squared distance resolve to the lowest point index, so results
/// match a (distance^2, index) lexicographic brute-force scan bit for bit.
class KdTree3 {
 public:
  struct Hit {
    int index = -1;
    double d2 = 0.0;
  };

  explicit KdTree3(const std::vector<Vec3>& points) : points_(points) {
    if (points_.empty()) {
      throw std::invalid_argument("KdTree3: empty point set");
    }
    ids_.resize(points_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) ids_[i] = static_cast<int>(i);
    build(0, static_cast<int>(ids_.size()), 0);
  }

  Hit nearest(const Vec3& query) const {
    Hit best;
    best.d2 = std::numeric_limits<double>::infinity();
    search(query, 0, static_cast<int>(ids_.size()), 0, best);
    return best;
  }

 private:
  void build(int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    const int axis = depth % 3;
    const int mid = lo + (hi - lo) / 2;
    std::nth_element(ids_.begin() + lo, ids_.begin() + mid, ids_.begin() + hi,
                     [&](int a, int b) {
                       const double ca = points_[a][axis];
                       const double cb = points_[b][axis];
                       return ca != cb ? ca < cb : a < b;
                     });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void consider(const Vec3& query, int id, Hit& best) const {
    const double d2 = (points_[id] - query).squaredNorm();
    if (d2 < best.d2 || (d2 == best.d2 && id < best.index)) {
      best.index = id;
      best.d2 = d2;
    }
  }

  void search(const Vec3& query, int lo, int hi, int depth, Hit& best) const {
    if (hi <= lo) return;
    if (hi - lo == 1) {
      consider(query, ids_[lo], best);
      return;
    }
    const int axis = depth % 3;
    const int mid = lo + (hi - lo) / 2;
    consider(query, ids_[mid], best);
    const double split = points_[ids_[mid]][axis];
    const double gap = query[axis] - split;
    if (gap < 0) {
      search(query, lo, mid, depth + 1, best);
      if (gap * gap <= best.d2) search(query, mid + 1, hi, depth + 1, best);
    } else {
      search(query, mid + 1, hi, depth + 1, best);
      if (gap * gap <= best.d2) search(query, lo, mid, depth + 1, best);
    }
  }

  std::vector<Vec3> points_;
  std::vector<int> ids_;
};

}  // namespace surfrec
