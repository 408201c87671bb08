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

#include "rmfnl/surrogate.hpp"

#include <cmath>

namespace rmfnl {

namespace {

void check_factors(const ObservedMatrix& data, const FactorPair& factors) {
  if (factors.u.rows() != data.rows() || factors.v.rows() != data.cols() ||
      factors.u.cols() != factors.v.cols() || factors.u.cols() < 1)
    throw DimensionError("factors do not match data dimensions");
}

}  // namespace

SurrogateContext build_context(const ObservedMatrix& data,
                               const FactorPair& factors, const Penalty& p) {
  check_factors(data, factors);
  if (!(factors.lambda > 0))
    throw ConfigError("build_context: lambda must be positive");

  SurrogateContext ctx;
  const Index nnz = data.nnz();
  const Vector prediction = gather_product(factors.u, factors.v, data);

  ctx.wdot.resize(nnz);
  ctx.residual.resize(nnz);
  double b = 0.0;
  // The tangent majorizer of phi is taken at the current residual
  // |M - U V^T|: that is the point the surrogate must be tight at for
  // F(0,0) = H(U,V) and hence for monotone MM descent.
#pragma omp parallel for schedule(static) reduction(+ : b)
  for (Index t = 0; t < nnz; ++t) {
    ctx.residual[t] = data.values()[t] - prediction[t];
    const double a = std::abs(ctx.residual[t]);
    const double w = p.derivative(a);
    ctx.wdot[t] = w;
    b += p.value(a) - w * a;
  }
  ctx.b = b;

  auto [rs, cs] = row_col_sums(SparseOnOmega(data, ctx.wdot));
  ctx.lambda_r_sq = std::move(rs);
  ctx.lambda_c_sq = std::move(cs);
  ctx.a_r = (factors.lambda + ctx.lambda_r_sq.array()).inverse();
  ctx.a_c = (factors.lambda + ctx.lambda_c_sq.array()).inverse();
  return ctx;
}

double objective_value(const ObservedMatrix& data, const FactorPair& factors,
                       const Penalty& p) {
  check_factors(data, factors);
  const Vector prediction = gather_product(factors.u, factors.v, data);
  const Index nnz = data.nnz();
  double loss = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : loss)
  for (Index t = 0; t < nnz; ++t)
    loss += p.value(std::abs(data.values()[t] - prediction[t]));
  return loss + 0.5 * factors.lambda *
                    (factors.u.squaredNorm() + factors.v.squaredNorm());
}

double surrogate_value(const SurrogateContext& ctx,
                       const ObservedMatrix& data, const FactorPair& factors,
                       const Matrix& ubar, const Matrix& vbar) {
  check_factors(data, factors);
  if (ubar.rows() != factors.u.rows() || vbar.rows() != factors.v.rows() ||
      ubar.cols() != factors.rank() || vbar.cols() != factors.rank())
    throw DimensionError("surrogate_value: increment dimensions disagree");

  // l1 term over the observed positions:
  // wdot .* (residual - ubar V^T - U vbar^T).
  const Vector du = gather_product(ubar, factors.v, data);
  const Vector dv = gather_product(factors.u, vbar, data);
  const double l1 =
      (ctx.wdot.array() * (ctx.residual - du - dv).array().abs()).sum();

  const double quad_u =
      0.5 * factors.lambda * (factors.u + ubar).squaredNorm() +
      0.5 * (ctx.lambda_r_sq.array() * ubar.array().square().rowwise().sum())
                .sum();
  const double quad_v =
      0.5 * factors.lambda * (factors.v + vbar).squaredNorm() +
      0.5 * (ctx.lambda_c_sq.array() * vbar.array().square().rowwise().sum())
                .sum();
  return l1 + quad_u + quad_v + ctx.b;
}

}  // namespace rmfnl
