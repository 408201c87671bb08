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
#include <cstdio>
#include <fstream>
#include <random>
#include <map>
#include <set>
#include <string>

#include "oracles.hpp"
#include "rmfnl/workbench.hpp"

using namespace rmfnl;

namespace {

std::string temp_path(const std::string& name) {
  return "rmfnl_test_" + name;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("observed fraction matches the protocol") {
  SyntheticSpec spec;
  spec.m = 250;
  CHECK(spec.observed_fraction() ==
        doctest::Approx(10.0 * std::log(250.0) / 250.0).epsilon(1e-15));
  CHECK(spec.observed_fraction() == doctest::Approx(0.2208).epsilon(1e-3));
}

TEST_CASE("synthetic generator: determinism, splits, outliers") {
  SyntheticSpec spec;
  spec.m = 120;
  spec.seed = 5;
  const SyntheticBundle a = generate_synthetic(spec);
  const SyntheticBundle b = generate_synthetic(spec);
  CHECK(a.train.values() == b.train.values());
  CHECK(a.clean == b.clean);
  CHECK(a.test.values == b.test.values);

  // Split sizes: observed entries split half/half, the rest is test.
  const Index total = spec.m * spec.m;
  const Index observed = a.train.nnz() + static_cast<Index>(a.validation.omega.size());
  CHECK(std::abs(double(observed) / double(total) - spec.observed_fraction()) <=
        1.0 / double(total));
  CHECK(std::abs(a.train.nnz() -
                 static_cast<Index>(a.validation.omega.size())) <= 1);
  CHECK(static_cast<Index>(a.test.omega.size()) == total - observed);

  // Disjointness and coverage of the three index sets.
  std::set<std::pair<Index, Index>> all;
  for (Index t = 0; t < a.train.nnz(); ++t)
    all.insert({a.train.row_index()[t], a.train.col_index()[t]});
  CHECK(static_cast<Index>(all.size()) == a.train.nnz());
  for (const auto& p : a.validation.omega)
    CHECK(all.insert({p.row, p.col}).second);
  for (const auto& p : a.test.omega) CHECK(all.insert({p.row, p.col}).second);
  CHECK(static_cast<Index>(all.size()) == total);

  // Test values are the clean matrix exactly.
  for (std::size_t t = 0; t < a.test.omega.size(); ++t)
    CHECK(a.test.values[static_cast<Index>(t)] ==
          a.clean(a.test.omega[t].row, a.test.omega[t].col));
}

TEST_CASE("generator statistics over 10 seeds at m=500") {
  SyntheticSpec spec;
  spec.m = 500;
  double outlier_frac_sum = 0, observe_frac_sum = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    spec.seed = seed;
    const SyntheticBundle bundle = generate_synthetic(spec);
    const Index total = spec.m * spec.m;
    const Index observed =
        bundle.train.nnz() + static_cast<Index>(bundle.validation.omega.size());
    observe_frac_sum += double(observed) / double(total);

    // Count the large deviations on training entries: with sigma ~ 0.316
    // any |M - X| > 2.5 is an outlier beyond reasonable noise.
    Index outliers = 0;
    for (Index t = 0; t < bundle.train.nnz(); ++t) {
      const double clean = bundle.clean(bundle.train.row_index()[t],
                                        bundle.train.col_index()[t]);
      if (std::abs(bundle.train.values()[t] - clean) > 2.5) ++outliers;
    }
    outlier_frac_sum += double(outliers) / double(bundle.train.nnz());
  }
  CHECK(std::abs(observe_frac_sum / 10 - spec.observed_fraction()) <= 0.002);
  CHECK(std::abs(outlier_frac_sum / 10 - 0.05) <= 0.005);
}

TEST_CASE("merge_observed folds a held-out split into training") {
  SyntheticSpec spec;
  spec.m = 60;
  spec.seed = 5;
  const SyntheticBundle bundle = generate_synthetic(spec);
  const ObservedMatrix merged =
      merge_observed(bundle.train, bundle.validation);
  CHECK(merged.nnz() ==
        bundle.train.nnz() + static_cast<Index>(bundle.validation.omega.size()));

  // Every merged entry carries the value from its source split.
  std::map<std::pair<Index, Index>, double> expected;
  for (Index t = 0; t < bundle.train.nnz(); ++t)
    expected[{bundle.train.row_index()[t], bundle.train.col_index()[t]}] =
        bundle.train.values()[t];
  for (std::size_t t = 0; t < bundle.validation.omega.size(); ++t)
    expected[{bundle.validation.omega[t].row,
              bundle.validation.omega[t].col}] = bundle.validation.values[t];
  CHECK(expected.size() == static_cast<std::size_t>(merged.nnz()));
  for (Index t = 0; t < merged.nnz(); ++t)
    CHECK(expected.at({merged.row_index()[t], merged.col_index()[t]}) ==
          merged.values()[t]);

  EvalMask bad = bundle.validation;
  bad.values.conservativeResize(bad.values.size() - 1);
  CHECK_THROWS_AS(merge_observed(bundle.train, bad), DimensionError);
}

TEST_CASE("love/hate attack") {
  std::mt19937_64 rng(3);
  ObservedMatrix data = oracles::random_instance(40, 100, 600, rng);
  const double lo = data.values().minCoeff(), hi = data.values().maxCoeff();

  const ObservedMatrix attacked = love_hate_attack(data, 0.03, 7);
  // ceil(3% of 100) = 3 perturbed columns.
  std::set<Index> changed;
  for (Index t = 0; t < data.nnz(); ++t)
    if (attacked.values()[t] != data.values()[t])
      changed.insert(data.col_index()[t]);
  CHECK(changed.size() <= 3);  // a column may coincidentally keep its values
  // Perturbed columns contain only {min, max} afterwards.
  std::set<Index> extremes_only;
  for (Index j = 0; j < data.cols(); ++j) {
    bool all_extreme = true, any = false;
    for (Index s = data.col_ptr()[j]; s < data.col_ptr()[j + 1]; ++s) {
      any = true;
      const double v = attacked.values()[data.col_order()[s]];
      all_extreme = all_extreme && (v == lo || v == hi);
    }
    if (any && all_extreme) extremes_only.insert(j);
  }
  for (Index j : changed) CHECK(extremes_only.count(j) == 1);
  CHECK(extremes_only.size() >= 3);

  // Idempotence under the same seed.
  const ObservedMatrix twice = love_hate_attack(attacked, 0.03, 7);
  CHECK(twice.values() == attacked.values());

  // Degenerate range: min == max leaves the data unchanged.
  ObservedMatrix flat(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}},
                      Vector::Constant(4, 3.0));
  CHECK(love_hate_attack(flat, 1.0, 1).values() == flat.values());

  CHECK_THROWS_AS(love_hate_attack(data, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(love_hate_attack(data, 1.5, 1), ConfigError);
}

TEST_CASE("rmse and mae hand values and oracle agreement") {
  FactorPair f{Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 1.0), 0.0};
  EvalMask one{{{0, 0}}, Vector::Constant(1, 1.0)};
  CHECK(rmse(f, one) == doctest::Approx(2.0).epsilon(1e-15));

  FactorPair id{Matrix::Identity(2, 2), Matrix::Identity(2, 2), 0.0};
  EvalMask two{{{0, 0}, {1, 1}}, Vector::Zero(2)};
  two.values << 2.0, 4.0;  // errors 1 and 3
  CHECK(mae(id, two) == doctest::Approx(2.0).epsilon(1e-15));
  EvalMask perfect{{{0, 0}, {1, 1}}, Vector::Ones(2)};
  CHECK(rmse(id, perfect) == 0.0);
  CHECK(mae(id, perfect) == 0.0);

  std::mt19937_64 rng(9);
  ObservedMatrix data = oracles::random_instance(6, 6, 10, rng);
  FactorPair f2 = oracles::random_factors(6, 6, 2, 0.0, rng);
  EvalMask mask;
  for (Index t = 0; t < data.nnz(); ++t)
    mask.omega.push_back({data.row_index()[t], data.col_index()[t]});
  mask.values = data.values();
  const Matrix pred = f2.u * f2.v.transpose();
  double sq = 0, ab = 0;
  for (std::size_t t = 0; t < mask.omega.size(); ++t) {
    const double e = pred(mask.omega[t].row, mask.omega[t].col) -
                     mask.values[static_cast<Index>(t)];
    sq += e * e;
    ab += std::abs(e);
  }
  CHECK(rmse(f2, mask) ==
        doctest::Approx(std::sqrt(sq / double(mask.omega.size())))
            .epsilon(1e-12));
  CHECK(mae(f2, mask) ==
        doctest::Approx(ab / double(mask.omega.size())).epsilon(1e-12));
  CHECK(mae(f2, mask) <= rmse(f2, mask) + 1e-15);

  EvalMask empty;
  CHECK_THROWS_AS(rmse(f2, empty), DataError);
}

TEST_CASE("ingest_ratings basics and errors") {
  const std::string path = temp_path("ratings.tsv");
  write_file(path,
             "1\t1\t5.0\n"
             "1\t2\t3.0\n"
             "2\t1\t1.0\n");
  ObservedMatrix data = ingest_ratings(path);
  CHECK(data.rows() == 2);
  CHECK(data.cols() == 2);
  CHECK(data.nnz() == 3);
  CHECK(data.values()[0] == 5.0);

  // Extra columns (timestamps) are ignored; comma separation works.
  write_file(path, "1,1,5.0,881250949\n2,2,3.5,891717742\n2,1,1,881250949\n");
  ObservedMatrix ml = ingest_ratings(path);
  CHECK(ml.nnz() == 3);

  write_file(path, "1\t1\t5.0\nbad line\n");
  try {
    ingest_ratings(path);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  write_file(path, "1\t1\t5.0\n1\t1\t4.0\n");
  CHECK_THROWS_AS(ingest_ratings(path), ParseError);

  CHECK_THROWS_AS(ingest_ratings("rmfnl_no_such_file.tsv"), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("l2 baseline recovers noiseless low-rank data") {
  std::mt19937_64 rng(21);
  ObservedMatrix pattern = oracles::random_instance(20, 20, 260, rng);
  FactorPair truth = oracles::random_factors(20, 20, 3, 0.0, rng);
  Vector exact = gather_product(truth.u, truth.v, pattern);
  std::vector<IndexPair> omega;
  for (Index t = 0; t < pattern.nnz(); ++t)
    omega.push_back({pattern.row_index()[t], pattern.col_index()[t]});
  ObservedMatrix data(20, 20, std::move(omega), exact);

  const FactorPair fitted = l2_baseline_fit(data, 3, 1e-9, 120, 1);
  EvalMask train_mask;
  for (Index t = 0; t < data.nnz(); ++t)
    train_mask.omega.push_back({data.row_index()[t], data.col_index()[t]});
  train_mask.values = data.values();
  CHECK(rmse(fitted, train_mask) < 1e-6);
}

TEST_CASE("l2 baseline objective is non-increasing per sweep") {
  std::mt19937_64 rng(25);
  ObservedMatrix data = oracles::random_instance(15, 15, 100, rng);
  const double lambda = 0.05;
  auto l2_objective = [&](const FactorPair& f) {
    const Vector fit = gather_product(f.u, f.v, data);
    return 0.5 * (data.values() - fit).squaredNorm() +
           0.5 * lambda * (f.u.squaredNorm() + f.v.squaredNorm());
  };
  double prev = 1e300;
  for (int sweeps = 1; sweeps <= 8; ++sweeps) {
    const FactorPair f = l2_baseline_fit(data, 2, lambda, sweeps, 3);
    const double obj = l2_objective(f);
    CHECK(obj <= prev + 1e-9);
    prev = obj;
  }
}

TEST_CASE("bundle save and load round trips") {
  std::mt19937_64 rng(31);
  ObservedMatrix data = oracles::random_instance(5, 6, 8, rng);
  const std::string path = temp_path("bundle.tsv");
  save_observed(data, path);
  const ObservedMatrix loaded = load_observed(path);
  CHECK(loaded.rows() == data.rows());
  CHECK(loaded.cols() == data.cols());
  CHECK(loaded.values() == data.values());

  // load_any dispatches on the header.
  const ObservedMatrix any = load_any(path);
  CHECK(any.values() == data.values());

  EvalMask mask{{{0, 1}, {2, 3}}, Vector::Zero(2)};
  mask.values << 1.5, -2.5;
  const std::string mpath = temp_path("mask.tsv");
  save_mask(mask, 5, 6, mpath);
  const EvalMask mloaded = load_mask(mpath);
  REQUIRE(mloaded.omega.size() == 2);
  CHECK(mloaded.omega[1].col == 3);
  CHECK(mloaded.values == mask.values);

  // A mask file is not an observed-matrix file.
  CHECK_THROWS_AS(load_observed(mpath), ParseError);
  std::remove(path.c_str());
  std::remove(mpath.c_str());
}
