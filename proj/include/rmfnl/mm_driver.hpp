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

#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "rmfnl/dual_solver.hpp"

namespace rmfnl {

struct InitSpec {
  enum class Mode { kGaussian, kProvided, kSpectral };
  Mode mode = Mode::kGaussian;
  std::uint64_t seed = 0;
  double scale = 1.0;
  Matrix u0;  // used when mode == kProvided
  Matrix v0;
  // Winsorization level of the spectral start, in robust (MAD-based)
  // standard deviations of the observed values.
  double spectral_clip = 1.5;

  static InitSpec gaussian(std::uint64_t seed, double scale = 1.0) {
    InitSpec init;
    init.mode = Mode::kGaussian;
    init.seed = seed;
    init.scale = scale;
    return init;
  }
  static InitSpec provided(Matrix u, Matrix v) {
    InitSpec init;
    init.mode = Mode::kProvided;
    init.u0 = std::move(u);
    init.v0 = std::move(v);
    return init;
  }
  static InitSpec spectral(double clip = 1.5) {
    InitSpec init;
    init.mode = Mode::kSpectral;
    init.spectral_clip = clip;
    return init;
  }
};

struct RmfnlConfig {
  int rank = 5;
  // Unset means lambda = 20 / (m + n).
  std::optional<double> lambda;
  Penalty penalty{PenaltyKind::kLsp};
  double outer_tol = 1e-4;
  int max_outer = 100;
  DualConfig inner;
  InitSpec init;
  // Assert monotone and sufficient decrease each outer iteration.
  bool decrease_check = true;
};

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double surrogate = 0.0;
  double u_inc = 0.0;  // |ubar|_F
  double v_inc = 0.0;  // |vbar|_F
  int inner_iters = 0;
  double seconds = 0.0;
};

/// Per-outer-iteration history of a fit. The objective column is
/// non-increasing.
struct FitTrace {
  std::vector<TraceRecord> records;

  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

// Gaussian (seeded, i.i.d. N(0, scale^2)) or caller-provided factors.
// Spectral mode needs the data matrix; use spectral_init for it.
FactorPair initialize(Index m, Index n, Index r, const InitSpec& init);

// Deterministic, outlier-resistant starting point: the observed values
// are winsorized at clip robust standard deviations (MAD estimate),
// zero-filled into a dense matrix, rescaled by the inverse observation
// fraction, and truncated to rank r via SVD with the singular values
// split evenly between the two factors.
FactorPair spectral_init(const ObservedMatrix& data, Index r,
                         double clip = 1.5);

// The outer loop: repeat build_context, solve_dual, recover_primal and
// factor update until the relative objective change drops below
// outer_tol or max_outer iterations are spent.
std::pair<FactorPair, FitTrace> fit(const ObservedMatrix& data,
                                    const RmfnlConfig& config);

}  // namespace rmfnl
