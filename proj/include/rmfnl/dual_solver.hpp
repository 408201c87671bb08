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

#include <utility>

#include "rmfnl/surrogate.hpp"

namespace rmfnl {

struct DualConfig {
  int max_inner = 300;
  double inner_tol = 1e-6;
  bool warm_start = false;
};

struct SolverReport {
  int inner_iters = 0;
  double final_dual_objective = 0.0;
  double final_relative_change = 0.0;
  int line_search_evals = 0;
};

// Box bounds of the dual feasible set: |x_t| <= wdot_t. These are the
// conjugate bounds of the weighted l1 term of the surrogate.
Vector dual_bounds(const SurrogateContext& ctx);

// Gradient of the dual objective, using only sparse products:
// gather(Q, V) + gather(U, P) - residual with Q = A_r (H(x) V - lambda U)
// and P = A_c (H(x)^T U - lambda V). O(nnz r + (m+n) r).
Vector dual_gradient(const SurrogateContext& ctx, const ObservedMatrix& data,
                     const FactorPair& factors, const Vector& x);

// Dual objective:
//   1/2 |sqrt(A_r)(H(x) V - lambda U)|_F^2
// + 1/2 |sqrt(A_c)(H(x)^T U - lambda V)|_F^2 - <x, residual>.
double dual_objective(const SurrogateContext& ctx, const ObservedMatrix& data,
                      const FactorPair& factors, const Vector& x);

// Euclidean projection onto the box: sign(z_t) min(|z_t|, bound_t).
Vector project_box(const Vector& z, const Vector& bounds);

// Accelerated proximal gradient on the dual with backtracking line
// search and function-value adaptive restart. Starts from x = 0 (or the
// caller-provided warm start, projected to feasibility). The accepted
// objective sequence is non-increasing. Stops when the relative change
// of the dual objective drops below inner_tol or after max_inner
// iterations.
std::pair<Vector, SolverReport> solve_dual(const SurrogateContext& ctx,
                                           const ObservedMatrix& data,
                                           const FactorPair& factors,
                                           const DualConfig& config,
                                           const Vector* warm_start = nullptr);

// Primal increments from a dual point:
// ubar = A_r (H(x) V - lambda U), vbar = A_c (H(x)^T U - lambda V).
std::pair<Matrix, Matrix> recover_primal(const SurrogateContext& ctx,
                                         const ObservedMatrix& data,
                                         const FactorPair& factors,
                                         const Vector& x);

}  // namespace rmfnl
