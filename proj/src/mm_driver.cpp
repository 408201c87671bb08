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

#include "rmfnl/mm_driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <tuple>

namespace rmfnl {

namespace {

bool log_enabled() {
  const char* env = std::getenv("RMFNL_LOG");
  return env != nullptr && std::string(env) != "" &&
         std::string(env) != "0" && std::string(env) != "off";
}

}  // namespace

void FitTrace::write_csv(std::ostream& out) const {
  out.precision(17);
  out << "iter,objective,surrogate,u_inc,v_inc,inner_iters,seconds\n";
  for (const auto& r : records)
    out << r.iter << ',' << r.objective << ',' << r.surrogate << ','
        << r.u_inc << ',' << r.v_inc << ',' << r.inner_iters << ','
        << r.seconds << '\n';
}

void FitTrace::write_json(std::ostream& out) const {
  out.precision(17);
  out << "[";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << (i ? ",\n " : "\n ") << "{\"iter\":" << r.iter
        << ",\"objective\":" << r.objective
        << ",\"surrogate\":" << r.surrogate << ",\"u_inc\":" << r.u_inc
        << ",\"v_inc\":" << r.v_inc << ",\"inner_iters\":" << r.inner_iters
        << ",\"seconds\":" << r.seconds << "}";
  }
  out << "\n]\n";
}

FactorPair initialize(Index m, Index n, Index r, const InitSpec& init) {
  if (m < 1 || n < 1 || r < 1)
    throw DimensionError("initialize: invalid dimensions");
  FactorPair factors;
  if (init.mode == InitSpec::Mode::kProvided) {
    if (init.u0.rows() != m || init.u0.cols() != r || init.v0.rows() != n ||
        init.v0.cols() != r)
      throw DimensionError("initialize: provided factors have wrong shape");
    factors.u = init.u0;
    factors.v = init.v0;
    return factors;
  }
  if (init.mode == InitSpec::Mode::kSpectral)
    throw ConfigError(
        "initialize: spectral mode needs the data matrix; call "
        "spectral_init or fit instead");
  std::mt19937_64 rng(init.seed);
  std::normal_distribution<double> normal(0.0, init.scale);
  factors.u.resize(m, r);
  factors.v.resize(n, r);
  for (Index i = 0; i < m; ++i)
    for (Index q = 0; q < r; ++q) factors.u(i, q) = normal(rng);
  for (Index j = 0; j < n; ++j)
    for (Index q = 0; q < r; ++q) factors.v(j, q) = normal(rng);
  return factors;
}

FactorPair spectral_init(const ObservedMatrix& data, Index r, double clip) {
  if (r < 1 || r > std::min(data.rows(), data.cols()))
    throw DimensionError("spectral_init: invalid rank");
  if (!(clip > 0)) throw ConfigError("spectral_init: clip must be positive");
  const Index m = data.rows(), n = data.cols(), nnz = data.nnz();
  if (nnz < 1) throw DimensionError("spectral_init: empty observation set");

  // Robust scale of the observed values via the median absolute value;
  // 0.6745 converts the MAD of a centered Gaussian to its sigma.
  std::vector<double> mags(static_cast<std::size_t>(nnz));
  for (Index t = 0; t < nnz; ++t) mags[t] = std::abs(data.values()[t]);
  std::nth_element(mags.begin(), mags.begin() + nnz / 2, mags.end());
  const double threshold = clip * mags[nnz / 2] / 0.6745;

  // Winsorized zero-fill, rescaled so the expectation matches the full
  // matrix under uniform sampling.
  Matrix dense = Matrix::Zero(m, n);
  const double p = static_cast<double>(nnz) /
                   (static_cast<double>(m) * static_cast<double>(n));
  for (Index t = 0; t < nnz; ++t) {
    const double v =
        std::clamp(data.values()[t], -threshold, threshold);
    dense(data.row_index()[t], data.col_index()[t]) = v / p;
  }

  Eigen::BDCSVD<Matrix> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector scales = svd.singularValues().head(r).array().sqrt();
  FactorPair factors;
  factors.u = svd.matrixU().leftCols(r) * scales.asDiagonal();
  factors.v = svd.matrixV().leftCols(r) * scales.asDiagonal();
  return factors;
}

std::pair<FactorPair, FitTrace> fit(const ObservedMatrix& data,
                                    const RmfnlConfig& config) {
  using Clock = std::chrono::steady_clock;
  if (config.rank < 1) throw ConfigError("fit: rank must be >= 1");
  if (!(config.outer_tol > 0))
    throw ConfigError("fit: outer_tol must be positive");
  const double lambda =
      config.lambda.value_or(20.0 / static_cast<double>(data.rows() +
                                                        data.cols()));
  if (!(lambda > 0)) throw ConfigError("fit: lambda must be positive");

  FactorPair factors =
      config.init.mode == InitSpec::Mode::kSpectral
          ? spectral_init(data, config.rank, config.init.spectral_clip)
          : initialize(data.rows(), data.cols(), config.rank, config.init);
  factors.lambda = lambda;

  FitTrace trace;
  const bool verbose = log_enabled();
  double obj = objective_value(data, factors, config.penalty);
  Vector x_prev;

  for (int k = 1; k <= config.max_outer; ++k) {
    const auto tic = Clock::now();
    const SurrogateContext ctx = build_context(data, factors, config.penalty);
    auto [x, report] = solve_dual(ctx, data, factors, config.inner,
                                  x_prev.size() ? &x_prev : nullptr);
    auto [ubar, vbar] = recover_primal(ctx, data, factors, x);
    double surr = surrogate_value(ctx, data, factors, ubar, vbar);
    if (surr >= obj) {
      // The inner solve was too coarse to certify descent. Before
      // treating the iterate as stationary, re-solve the (convex)
      // subproblem to much higher accuracy.
      DualConfig precise = config.inner;
      precise.max_inner = std::max(20 * config.inner.max_inner, 5000);
      precise.inner_tol = std::min(config.inner.inner_tol * 1e-6, 1e-12);
      precise.warm_start = false;
      std::tie(x, report) = solve_dual(ctx, data, factors, precise, nullptr);
      std::tie(ubar, vbar) = recover_primal(ctx, data, factors, x);
      surr = surrogate_value(ctx, data, factors, ubar, vbar);
    }
    if (config.inner.warm_start) x_prev = x;

    // The surrogate is tight at zero increments, so obj equals F(0,0).
    // If the subproblem solution cannot improve on that (the current
    // iterate is already stationary up to the inner tolerance), accept
    // the factors as converged instead of taking a useless step.
    if (surr >= obj) {
      TraceRecord rec;
      rec.iter = k;
      rec.objective = obj;
      rec.surrogate = surr;
      rec.inner_iters = report.inner_iters;
      rec.seconds =
          std::chrono::duration<double>(Clock::now() - tic).count();
      trace.records.push_back(rec);
      if (verbose)
        std::cerr << "[rmfnl] outer " << k
                  << " stationary (no surrogate descent), stopping\n";
      break;
    }

    factors.u += ubar;
    factors.v += vbar;
    const double obj_next = objective_value(data, factors, config.penalty);
    if (!std::isfinite(obj_next))
      throw NumericalError("fit: non-finite objective", k);

    const double u_inc_sq = ubar.squaredNorm();
    const double v_inc_sq = vbar.squaredNorm();
    if (config.decrease_check) {
      if (obj_next > obj + 1e-8)
        throw NumericalError("fit: objective increased at outer iteration " +
                                 std::to_string(k),
                             k);
      const double alpha = std::min(ctx.lambda_r_sq.minCoeff(),
                                    ctx.lambda_c_sq.minCoeff());
      if (obj - obj_next + 1e-8 < 0.5 * alpha * (u_inc_sq + v_inc_sq))
        throw NumericalError(
            "fit: sufficient-decrease inequality violated at outer "
            "iteration " +
                std::to_string(k),
            k);
    }

    TraceRecord rec;
    rec.iter = k;
    rec.objective = obj_next;
    rec.surrogate = surr;
    rec.u_inc = std::sqrt(u_inc_sq);
    rec.v_inc = std::sqrt(v_inc_sq);
    rec.inner_iters = report.inner_iters;
    rec.seconds = std::chrono::duration<double>(Clock::now() - tic).count();
    trace.records.push_back(rec);
    if (verbose)
      std::cerr << "[rmfnl] outer " << k << " objective " << obj_next
                << " inner " << report.inner_iters << " ("
                << rec.seconds << "s)\n";

    const double rel = std::abs(obj - obj_next) / std::max(1.0, std::abs(obj));
    obj = obj_next;
    if (rel < config.outer_tol) break;
  }
  return {std::move(factors), std::move(trace)};
}

}  // namespace rmfnl
