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

#include "rmfnl/dual_solver.hpp"

#include <cmath>
#include <random>

namespace rmfnl {

namespace {

// Row-scaled H(x) V - lambda U, i.e. A_r (H(x) V - lambda U).
Matrix scaled_row_term(const SurrogateContext& ctx, const ObservedMatrix& data,
                       const FactorPair& factors, const Vector& x) {
  Matrix q = sparse_dense_product(SparseOnOmega(data, x), factors.v) -
             factors.lambda * factors.u;
  q.array().colwise() *= ctx.a_r.array();
  return q;
}

// A_c (H(x)^T U - lambda V).
Matrix scaled_col_term(const SurrogateContext& ctx, const ObservedMatrix& data,
                       const FactorPair& factors, const Vector& x) {
  Matrix p = sparse_dense_product_transposed(SparseOnOmega(data, x),
                                             factors.u) -
             factors.lambda * factors.v;
  p.array().colwise() *= ctx.a_c.array();
  return p;
}

// Hessian-vector product of the quadratic part of the dual objective.
Vector quad_form_apply(const SurrogateContext& ctx, const ObservedMatrix& data,
                       const FactorPair& factors, const Vector& d) {
  Matrix q = sparse_dense_product(SparseOnOmega(data, d), factors.v);
  q.array().colwise() *= ctx.a_r.array();
  Matrix p = sparse_dense_product_transposed(SparseOnOmega(data, d),
                                             factors.u);
  p.array().colwise() *= ctx.a_c.array();
  return gather_product(q, factors.v, data) +
         gather_product(factors.u, p, data);
}

// Largest-eigenvalue estimate of the dual Hessian by power iteration.
double lipschitz_estimate(const SurrogateContext& ctx,
                          const ObservedMatrix& data,
                          const FactorPair& factors) {
  std::mt19937_64 rng(0);
  std::normal_distribution<double> normal;
  Vector d(data.nnz());
  for (Index t = 0; t < d.size(); ++t) d[t] = normal(rng);
  double norm = d.norm();
  if (norm == 0) return 1.0;
  d /= norm;
  double lambda_max = 1.0;
  for (int it = 0; it < 8; ++it) {
    Vector hd = quad_form_apply(ctx, data, factors, d);
    lambda_max = d.dot(hd);
    norm = hd.norm();
    if (norm < 1e-300) break;
    d = hd / norm;
  }
  return std::max(lambda_max, 1e-12);
}

}  // namespace

Vector dual_bounds(const SurrogateContext& ctx) { return ctx.wdot; }

Vector dual_gradient(const SurrogateContext& ctx, const ObservedMatrix& data,
                     const FactorPair& factors, const Vector& x) {
  if (x.size() != data.nnz())
    throw DimensionError("dual_gradient: x length does not match nnz");
  const Matrix q = scaled_row_term(ctx, data, factors, x);
  const Matrix p = scaled_col_term(ctx, data, factors, x);
  return gather_product(q, factors.v, data) +
         gather_product(factors.u, p, data) - ctx.residual;
}

double dual_objective(const SurrogateContext& ctx, const ObservedMatrix& data,
                      const FactorPair& factors, const Vector& x) {
  if (x.size() != data.nnz())
    throw DimensionError("dual_objective: x length does not match nnz");
  Matrix q = sparse_dense_product(SparseOnOmega(data, x), factors.v) -
             factors.lambda * factors.u;
  const double a1 =
      0.5 * (ctx.a_r.array() * q.array().square().rowwise().sum()).sum();
  Matrix p = sparse_dense_product_transposed(SparseOnOmega(data, x),
                                             factors.u) -
             factors.lambda * factors.v;
  const double a2 =
      0.5 * (ctx.a_c.array() * p.array().square().rowwise().sum()).sum();
  const double a3 = -x.dot(ctx.residual);
  return a1 + a2 + a3;
}

Vector project_box(const Vector& z, const Vector& bounds) {
  if (z.size() != bounds.size())
    throw DimensionError("project_box: length mismatch");
  return z.array().min(bounds.array()).max(-bounds.array());
}

std::pair<Vector, SolverReport> solve_dual(const SurrogateContext& ctx,
                                           const ObservedMatrix& data,
                                           const FactorPair& factors,
                                           const DualConfig& config,
                                           const Vector* warm_start) {
  if (config.max_inner < 1)
    throw ConfigError("solve_dual: max_inner must be >= 1");
  if (!(config.inner_tol > 0))
    throw ConfigError("solve_dual: inner_tol must be positive");

  const Vector bounds = dual_bounds(ctx);
  Vector x = (config.warm_start && warm_start != nullptr)
                 ? project_box(*warm_start, bounds)
                 : Vector::Zero(data.nnz());
  Vector y = x;
  double obj = dual_objective(ctx, data, factors, x);

  SolverReport report;
  report.final_dual_objective = obj;
  double step = 1.0 / lipschitz_estimate(ctx, data, factors);
  int momentum_iter = 1;  // resets on restart

  int calm_iters = 0;  // consecutive accepted steps with small change

  for (int k = 1; k <= config.max_inner; ++k) {
    report.inner_iters = k;
    Vector g = dual_gradient(ctx, data, factors, y);
    double obj_y = dual_objective(ctx, data, factors, y);
    // Let the step recover after conservative backtracks; otherwise one
    // early halving caps the step size for the whole solve.
    step *= 2.0;

    // Backtracking: halve the step until the quadratic upper bound at y
    // holds for the projected step.
    Vector x_next;
    double obj_next = 0.0;
    for (;;) {
      x_next = project_box(y - step * g, bounds);
      obj_next = dual_objective(ctx, data, factors, x_next);
      ++report.line_search_evals;
      const Vector diff = x_next - y;
      const double model =
          obj_y + g.dot(diff) + diff.squaredNorm() / (2.0 * step);
      if (obj_next <= model + 1e-15 * std::abs(model)) break;
      step *= 0.5;
      if (step < 1e-300)
        throw NumericalError("solve_dual: line search underflow", k);
    }
    if (!std::isfinite(obj_next))
      throw NumericalError("solve_dual: non-finite dual objective", k);

    if (obj_next > obj) {
      // Adaptive restart: drop the momentum and redo the step from the
      // last accepted iterate. A plain projected-gradient step from x
      // cannot increase the objective.
      momentum_iter = 1;
      y = x;
      calm_iters = 0;
      continue;
    }

    const double rel_change =
        std::abs(obj - obj_next) / std::max(1.0, std::abs(obj_next));
    const double beta = static_cast<double>(momentum_iter - 1) /
                        static_cast<double>(momentum_iter + 2);
    y = x_next + beta * (x_next - x);
    x = std::move(x_next);
    obj = obj_next;
    ++momentum_iter;

    report.final_dual_objective = obj;
    report.final_relative_change = rel_change;
    // Momentum methods can stall for an iteration or two without being
    // anywhere near the optimum, so demand a run of quiet iterations.
    calm_iters = rel_change < config.inner_tol ? calm_iters + 1 : 0;
    if (calm_iters >= 5) break;
  }
  return {std::move(x), report};
}

std::pair<Matrix, Matrix> recover_primal(const SurrogateContext& ctx,
                                         const ObservedMatrix& data,
                                         const FactorPair& factors,
                                         const Vector& x) {
  if (x.size() != data.nnz())
    throw DimensionError("recover_primal: x length does not match nnz");
  return {scaled_row_term(ctx, data, factors, x),
          scaled_col_term(ctx, data, factors, x)};
}

}  // namespace rmfnl
