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

#include "rmfnl/penalty.hpp"
#include "rmfnl/sparse.hpp"

namespace rmfnl {

/// Dense factors U (m x r), V (n x r) and the Frobenius regularization
/// weight lambda.
struct FactorPair {
  Matrix u;
  Matrix v;
  double lambda = 0.0;

  Index rank() const { return u.cols(); }
};

/// Per-outer-iteration quantities of the convex surrogate, all computed
/// on observed positions only. Immutable once built; shareable across
/// threads.
struct SurrogateContext {
  // Reweighted l1 weights: phi'(|M - [U V^T]|_t) at each observed
  // position (the tangent majorizer of phi is taken at the current
  // residual, which makes the surrogate tight at zero increments).
  Vector wdot;
  // M - U V^T on the observed positions.
  Vector residual;
  // Row/column sums of the weights (diagonals of Lambda_r^2, Lambda_c^2).
  Vector lambda_r_sq;
  Vector lambda_c_sq;
  // Diagonals of (lambda I + Lambda_r^2)^{-1} and the column analogue.
  Vector a_r;
  Vector a_c;
  // Constant term of the tangent majorizer, summed over observations.
  double b = 0.0;
};

// Builds the surrogate context at the current factors. Requires
// lambda > 0. O(nnz r + (m+n)).
SurrogateContext build_context(const ObservedMatrix& data,
                               const FactorPair& factors, const Penalty& p);

// Nonconvex objective: sum over observations of phi(|M - [U V^T]|) plus
// (lambda/2)(|U|_F^2 + |V|_F^2).
double objective_value(const ObservedMatrix& data, const FactorPair& factors,
                       const Penalty& p);

// Value of the convex surrogate at increments (ubar, vbar). Equals the
// objective when both increments are zero, and upper-bounds it at the
// shifted factors otherwise.
double surrogate_value(const SurrogateContext& ctx,
                       const ObservedMatrix& data, const FactorPair& factors,
                       const Matrix& ubar, const Matrix& vbar);

}  // namespace rmfnl
