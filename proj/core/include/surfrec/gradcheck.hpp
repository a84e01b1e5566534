// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace surfrec {

/// Worst central-finite-difference agreement for one parameter class.
struct GradCheckReport {
  std::string param_class;
  double max_rel_err = 0;
  int instances = 0;
  bool pass = false;
};

struct GradCheckConfig {
  std::uint64_t seed = 0;
  int instances = 20;   // randomized trials per parameter class
  double tol = 1e-3;    // max relative error accepted
  void validate() const;
};

/// Checks the rasterizer backward (mu, scale, q, alpha, color) and the
/// analytic gradients of chamfer, weighted_chamfer, angmf_nll and
/// photometric against central finite differences on seeded random
/// instances. Relative error uses |analytic - fd| / max(|analytic| + |fd|,
/// floor) with a floor of 1e-6 times the class's largest gradient
/// magnitude, so near-zero entries are judged against the class range.
std::vector<GradCheckReport> run_gradient_suite(const GradCheckConfig& cfg = {});

/// True iff every report passed.
bool all_passed(const std::vector<GradCheckReport>& reports);

}  // namespace surfrec
