// Copyright 2026 The RMFNL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rmfnl/penalty.hpp"

using namespace rmfnl;

namespace {

std::vector<Penalty> all_penalties() {
  return {Penalty(PenaltyKind::kL1),
          Penalty(PenaltyKind::kLsp, 1.0),
          Penalty(PenaltyKind::kLsp, 0.3),
          Penalty(PenaltyKind::kGeman, 0.5),
          Penalty(PenaltyKind::kLaplace, 1.0),
          Penalty(PenaltyKind::kMcp, 1.0, 0.05),
          Penalty(PenaltyKind::kScad, 2.5, 0.05)};
}

}  // namespace

TEST_CASE("hand values") {
  Penalty lsp(PenaltyKind::kLsp, 1.0);
  CHECK(lsp.value(0.0) == 0.0);
  CHECK(lsp.value(1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Penalty geman(PenaltyKind::kGeman, 0.5);
  CHECK(geman.value(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(geman.derivative(0.0) == doctest::Approx(2.0).epsilon(1e-12));

  Penalty laplace(PenaltyKind::kLaplace, 1.0);
  CHECK(laplace.derivative(0.0) == doctest::Approx(1.0).epsilon(1e-12));

  Penalty mcp(PenaltyKind::kMcp, 1.0, 0.05);
  CHECK(mcp.value(2.0) == doctest::Approx(0.6).epsilon(1e-12));

  Penalty l1(PenaltyKind::kL1);
  CHECK(l1.derivative(0.0) == 1.0);
  CHECK(l1.derivative(7.3) == 1.0);
  CHECK(l1.tangent_offset(5.0) == 0.0);
}

TEST_CASE("tangent_offset hand values") {
  for (const Penalty& p : all_penalties()) CHECK(p.tangent_offset(0.0) == 0.0);
  Penalty lsp(PenaltyKind::kLsp, 1.0);
  CHECK(lsp.tangent_offset(1.0) ==
        doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-12));
}

TEST_CASE("majorization property on random pairs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (const Penalty& p : all_penalties()) {
    for (int k = 0; k < 200; ++k) {
      const double alpha = u(rng), beta = u(rng);
      const double tangent = p.derivative(beta) * alpha + p.tangent_offset(beta);
      CHECK(p.value(alpha) <= tangent + 1e-12);
      const double at_beta = p.derivative(beta) * beta + p.tangent_offset(beta);
      CHECK(std::abs(p.value(beta) - at_beta) <= 1e-9);
    }
  }
}

TEST_CASE("derivative matches finite differences away from breakpoints") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 10.0);
  for (const Penalty& p : all_penalties()) {
    for (int k = 0; k < 100; ++k) {
      double a = u(rng);
      // Keep clear of the MCP/SCAD branch points at theta and 1.
      if (std::abs(a - p.theta()) < 1e-2 || std::abs(a - 1.0) < 1e-2) continue;
      const double h = 1e-6 * std::max(1.0, a);
      const double fd = (p.value(a + h) - p.value(a - h)) / (2 * h);
      CHECK(std::abs(fd - p.derivative(a)) <=
            1e-6 * std::max(1.0, std::abs(p.derivative(a))) + 1e-9);
    }
  }
}

TEST_CASE("one-sided differences at MCP and SCAD breakpoints") {
  // Branch formulas must agree in value at the breakpoints (continuity),
  // and the left derivative is what the left branch says.
  Penalty mcp(PenaltyKind::kMcp, 1.0, 0.05);
  const double h = 1e-7;
  const double left = (mcp.value(1.0) - mcp.value(1.0 - h)) / h;
  CHECK(std::abs(left - mcp.derivative(1.0)) <= 1e-5);
  // Continuity across the breakpoint.
  CHECK(std::abs(mcp.value(1.0 + 1e-12) - mcp.value(1.0)) <= 1e-10);

  Penalty scad(PenaltyKind::kScad, 2.5, 0.05);
  for (double bp : {1.0, 2.5}) {
    CHECK(std::abs(scad.value(bp + 1e-12) - scad.value(bp)) <= 1e-10);
    const double l = (scad.value(bp) - scad.value(bp - h)) / h;
    CHECK(std::abs(l - scad.derivative(bp)) <= 1e-5);
  }
}

TEST_CASE("monotone increasing value, non-increasing derivative") {
  for (const Penalty& p : all_penalties()) {
    double prev_v = p.value(0.0), prev_d = p.derivative(0.0);
    CHECK(prev_v == 0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double a = 12.0 * i / 1000.0;
      const double v = p.value(a), d = p.derivative(a);
      CHECK(v > prev_v);
      CHECK(d <= prev_d + 1e-12);
      CHECK(d > 0.0);
      prev_v = v;
      prev_d = d;
    }
  }
}

TEST_CASE("name round trip and parameter validation") {
  for (const char* name : {"l1", "lsp", "geman", "laplace", "mcp", "scad"}) {
    const Penalty p =
        Penalty::from_name(name, name == std::string("scad") ? 2.5 : 1.0);
    CHECK(p.name() == name);
  }
  CHECK_THROWS_AS(Penalty::from_name("huber"), ConfigError);
  CHECK_THROWS_AS(Penalty(PenaltyKind::kLsp, 0.0), ConfigError);
  CHECK_THROWS_AS(Penalty(PenaltyKind::kLsp, -1.0), ConfigError);
  CHECK_THROWS_AS(Penalty(PenaltyKind::kScad, 2.0), ConfigError);
  CHECK_THROWS_AS(Penalty(PenaltyKind::kMcp, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(Penalty(PenaltyKind::kLsp, 1.0).value(-0.5),
                  std::domain_error);
  CHECK_THROWS_AS(Penalty(PenaltyKind::kLsp, 1.0).derivative(-0.5),
                  std::domain_error);
}
