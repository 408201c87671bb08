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

#include "rmfnl/penalty.hpp"

#include <cmath>

namespace rmfnl {

Penalty::Penalty(PenaltyKind kind, double theta, double delta)
    : kind_(kind), theta_(theta), delta_(delta) {
  if (!(theta > 0)) throw ConfigError("penalty: theta must be positive");
  if (kind == PenaltyKind::kScad && !(theta > 2))
    throw ConfigError("penalty: SCAD requires theta > 2");
  if ((kind == PenaltyKind::kMcp || kind == PenaltyKind::kScad) &&
      !(delta > 0))
    throw ConfigError("penalty: MCP/SCAD require delta > 0");
}

Penalty Penalty::from_name(const std::string& name, double theta,
                           double delta) {
  if (name == "l1") return Penalty(PenaltyKind::kL1, theta, delta);
  if (name == "lsp") return Penalty(PenaltyKind::kLsp, theta, delta);
  if (name == "geman") return Penalty(PenaltyKind::kGeman, theta, delta);
  if (name == "laplace") return Penalty(PenaltyKind::kLaplace, theta, delta);
  if (name == "mcp") return Penalty(PenaltyKind::kMcp, theta, delta);
  if (name == "scad") return Penalty(PenaltyKind::kScad, theta, delta);
  throw ConfigError("penalty: unknown loss name '" + name + "'");
}

std::string Penalty::name() const {
  switch (kind_) {
    case PenaltyKind::kL1: return "l1";
    case PenaltyKind::kLsp: return "lsp";
    case PenaltyKind::kGeman: return "geman";
    case PenaltyKind::kLaplace: return "laplace";
    case PenaltyKind::kMcp: return "mcp";
    case PenaltyKind::kScad: return "scad";
  }
  return "?";
}

namespace {
void check_domain(double alpha) {
  if (alpha < 0) throw std::domain_error("penalty: negative argument");
}
}  // namespace

double Penalty::value(double alpha) const {
  check_domain(alpha);
  switch (kind_) {
    case PenaltyKind::kL1:
      return alpha;
    case PenaltyKind::kLsp:
      return std::log1p(alpha / theta_);
    case PenaltyKind::kGeman:
      return alpha / (theta_ + alpha);
    case PenaltyKind::kLaplace:
      return 1.0 - std::exp(-alpha / theta_);
    case PenaltyKind::kMcp:
      // Breakpoint alpha == theta belongs to the left branch.
      if (alpha <= theta_)
        return (1.0 + delta_) * alpha - alpha * alpha / (2.0 * theta_);
      return 0.5 * theta_ + delta_ * alpha;
    case PenaltyKind::kScad:
      if (alpha <= 1.0) return (1.0 + delta_) * alpha;
      if (alpha <= theta_)
        return (-alpha * alpha + 2.0 * theta_ * alpha - 1.0) /
                   (2.0 * (theta_ - 1.0)) +
               delta_ * alpha;
      return 0.5 * (1.0 + theta_) + delta_ * alpha;
  }
  return 0.0;
}

double Penalty::derivative(double alpha) const {
  check_domain(alpha);
  switch (kind_) {
    case PenaltyKind::kL1:
      return 1.0;
    case PenaltyKind::kLsp:
      return 1.0 / (theta_ + alpha);
    case PenaltyKind::kGeman: {
      const double s = theta_ + alpha;
      return theta_ / (s * s);
    }
    case PenaltyKind::kLaplace:
      return std::exp(-alpha / theta_) / theta_;
    case PenaltyKind::kMcp:
      if (alpha <= theta_) return 1.0 + delta_ - alpha / theta_;
      return delta_;
    case PenaltyKind::kScad:
      if (alpha <= 1.0) return 1.0 + delta_;
      if (alpha <= theta_)
        return (theta_ - alpha) / (theta_ - 1.0) + delta_;
      return delta_;
  }
  return 0.0;
}

double Penalty::tangent_offset(double beta) const {
  return value(beta) - derivative(beta) * beta;
}

}  // namespace rmfnl
