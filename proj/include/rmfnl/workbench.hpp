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
#include <string>

#include "rmfnl/mm_driver.hpp"

namespace rmfnl {

/// Synthetic protocol: a square m x m rank-5 matrix plus Gaussian noise
/// and sparse +-5 outliers, observed on a uniformly drawn index set of
/// fraction 10 log(m)/m, half of which is kept for training and half
/// for validation. The unobserved positions form the test mask against
/// the clean low-rank matrix.
struct SyntheticSpec {
  Index m = 250;
  int true_rank = 5;
  // Noise variance (sigma^2). The protocol's N(0, 0.1) is read as
  // standard deviation 0.1; the variance stays configurable so the
  // other reading is one flag away.
  double noise_variance = 0.01;
  double outlier_fraction = 0.05;
  double outlier_magnitude = 5.0;
  std::uint64_t seed = 0;

  double observed_fraction() const;
};

/// Held-out index set with aligned ground-truth values.
struct EvalMask {
  std::vector<IndexPair> omega;
  Vector values;
};

struct SyntheticBundle {
  ObservedMatrix train;
  EvalMask validation;
  EvalMask test;
  Matrix clean;  // the uncorrupted low-rank matrix
};

SyntheticBundle generate_synthetic(const SyntheticSpec& spec);

// The observed matrix with a held-out split folded back in. Used to
// train on the full observed sample when nothing consumes the
// validation entries (no hyper-parameter grid is being searched).
ObservedMatrix merge_observed(const ObservedMatrix& train,
                              const EvalMask& extra);

// Sets all observed ratings of ceil(item_fraction * n) uniformly chosen
// columns to the dataset minimum or maximum, chosen per item with equal
// probability.
ObservedMatrix love_hate_attack(const ObservedMatrix& data,
                                double item_fraction, std::uint64_t seed);

double rmse(const FactorPair& factors, const EvalMask& mask);
double mae(const FactorPair& factors, const EvalMask& mask);

// Reads (user, item, rating) triples from delimiter-separated text with
// one-based ids, remapping them to dense zero-based indices in order of
// first appearance. Extra columns (e.g. timestamps) are ignored.
ObservedMatrix ingest_ratings(const std::string& path);

// Alternating ridge regression on the observed entries; the reference
// l2 baseline. The objective is non-increasing per sweep.
FactorPair l2_baseline_fit(const ObservedMatrix& data, int rank,
                           double lambda, int sweeps,
                           std::uint64_t seed = 0);

// Bundle file formats: zero-based (i, j, value) triples with a
// "#rmfnl <m> <n>" header line.
void save_observed(const ObservedMatrix& data, const std::string& path);
ObservedMatrix load_observed(const std::string& path);
void save_mask(const EvalMask& mask, Index m, Index n,
               const std::string& path);
EvalMask load_mask(const std::string& path);

// Loads either a bundle file (with header) or a raw ratings file.
ObservedMatrix load_any(const std::string& path);

}  // namespace rmfnl
