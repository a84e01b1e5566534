// Copyright (c) 2026 The surfrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "doctest.h"
#include "surfrec/gradcheck.hpp"

using namespace surfrec;

TEST_CASE("gradient suite passes on a reduced instance count") {
  GradCheckConfig cfg;
  cfg.seed = 11;
  cfg.instances = 4;
  cfg.tol = 1e-3;
  const auto reports = run_gradient_suite(cfg);
  CHECK(reports.size() >= 8);
  for (const auto& r : reports) {
    INFO(r.param_class, " max_rel_err=", r.max_rel_err);
    CHECK(r.instances == cfg.instances);
    CHECK(r.max_rel_err <= cfg.tol);
    CHECK(r.pass);
  }
  CHECK(all_passed(reports));
}

TEST_CASE("gradient suite is deterministic for a fixed seed") {
  GradCheckConfig cfg;
  cfg.seed = 3;
  cfg.instances = 2;
  const auto a = run_gradient_suite(cfg);
  const auto b = run_gradient_suite(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].param_class == b[i].param_class);
    CHECK(a[i].max_rel_err == b[i].max_rel_err);
  }
}

TEST_CASE("gradient suite config validation") {
  GradCheckConfig bad;
  bad.instances = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = GradCheckConfig{};
  bad.tol = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("an impossible tolerance reports failure instead of passing") {
  GradCheckConfig cfg;
  cfg.seed = 5;
  cfg.instances = 1;
  cfg.tol = 1e-18;
  const auto reports = run_gradient_suite(cfg);
  CHECK_FALSE(all_passed(reports));
}
