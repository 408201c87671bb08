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

#pragma once

#include <string>

#include "rmfnl/errors.hpp"

namespace rmfnl {

enum class PenaltyKind { kL1, kLsp, kGeman, kLaplace, kMcp, kScad };

/// A concave loss phi on [0, inf) with phi(0) = 0, phi' > 0 and phi'
/// non-increasing. MCP and SCAD are exposed only in their modified form
/// (a + delta*|alpha| term keeps them strictly increasing).
///
/// Values are immutable; all evaluations are pure and thread-safe.
class Penalty {
 public:
  // theta > 0 (theta > 2 for SCAD); delta > 0, used by MCP/SCAD only.
  Penalty(PenaltyKind kind, double theta = 1.0, double delta = 0.05);

  // Parses names as used on the command line: l1, lsp, geman, laplace,
  // mcp, scad.
  static Penalty from_name(const std::string& name, double theta = 1.0,
                           double delta = 0.05);

  PenaltyKind kind() const { return kind_; }
  double theta() const { return theta_; }
  double delta() const { return delta_; }
  std::string name() const;

  // phi(alpha), alpha >= 0.
  double value(double alpha) const;

  // phi'(alpha), strictly positive; 1 everywhere for L1.
  double derivative(double alpha) const;

  // phi(beta) - phi'(beta)*beta, the constant term of the tangent-line
  // majorizer of phi at beta.
  double tangent_offset(double beta) const;

 private:
  PenaltyKind kind_;
  double theta_;
  double delta_;
};

}  // namespace rmfnl
