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

#include "rmfnl/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace rmfnl {

double SyntheticSpec::observed_fraction() const {
  return 10.0 * std::log(static_cast<double>(m)) / static_cast<double>(m);
}

namespace {

SyntheticBundle generate_once(const SyntheticSpec& spec, std::uint64_t seed) {
  const Index m = spec.m;
  const Index n = spec.m;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.noise_variance));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Matrix u(m, spec.true_rank), v(n, spec.true_rank);
  for (Index i = 0; i < m; ++i)
    for (int q = 0; q < spec.true_rank; ++q) u(i, q) = std_normal(rng);
  for (Index j = 0; j < n; ++j)
    for (int q = 0; q < spec.true_rank; ++q) v(j, q) = std_normal(rng);
  Matrix clean = u * v.transpose();

  // M = X + N + S, corrupted before the observation set is drawn.
  Matrix corrupted = clean;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) {
      corrupted(i, j) += noise(rng);
      if (unif(rng) < spec.outlier_fraction)
        corrupted(i, j) +=
            (unif(rng) < 0.5 ? spec.outlier_magnitude
                             : -spec.outlier_magnitude);
    }

  const Index total = m * n;
  const Index observed =
      std::min<Index>(total,
                      static_cast<Index>(
                          std::llround(spec.observed_fraction() * total)));
  std::vector<Index> all(total);
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);

  const Index n_train = observed / 2;
  std::vector<IndexPair> train_idx, val_idx, test_idx;
  train_idx.reserve(n_train);
  val_idx.reserve(observed - n_train);
  test_idx.reserve(total - observed);
  for (Index k = 0; k < total; ++k) {
    const IndexPair p{all[k] / n, all[k] % n};
    if (k < n_train)
      train_idx.push_back(p);
    else if (k < observed)
      val_idx.push_back(p);
    else
      test_idx.push_back(p);
  }

  auto gather = [&](const std::vector<IndexPair>& idx, const Matrix& src) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t t = 0; t < idx.size(); ++t)
      out[static_cast<Index>(t)] = src(idx[t].row, idx[t].col);
    return out;
  };

  Vector train_values = gather(train_idx, corrupted);
  SyntheticBundle bundle{
      ObservedMatrix(m, n, train_idx, std::move(train_values)),
      EvalMask{val_idx, gather(val_idx, corrupted)},
      EvalMask{test_idx, gather(test_idx, clean)},
      std::move(clean)};
  return bundle;
}

}  // namespace

SyntheticBundle generate_synthetic(const SyntheticSpec& spec) {
  if (spec.m < 2 || spec.true_rank < 1)
    throw ConfigError("generate_synthetic: invalid dimensions");
  if (!(spec.outlier_fraction >= 0 && spec.outlier_fraction < 1))
    throw ConfigError("generate_synthetic: outlier fraction outside [0,1)");
  // An unlucky draw can leave a training row or column empty; retry on
  // a derived substream.
  for (int attempt = 0; attempt < 10; ++attempt) {
    try {
      return generate_once(spec, spec.seed + 0x9e3779b97f4a7c15ull *
                                     static_cast<std::uint64_t>(attempt));
    } catch (const DataError&) {
      if (attempt == 9) throw;
    }
  }
  throw DataError("generate_synthetic: unreachable");
}

ObservedMatrix merge_observed(const ObservedMatrix& train,
                              const EvalMask& extra) {
  const Index extra_nnz = static_cast<Index>(extra.omega.size());
  if (extra.values.size() != extra_nnz)
    throw DimensionError("merge_observed: mask indices and values disagree");
  std::vector<IndexPair> omega;
  omega.reserve(static_cast<std::size_t>(train.nnz() + extra_nnz));
  Vector values(train.nnz() + extra_nnz);
  for (Index t = 0; t < train.nnz(); ++t) {
    omega.push_back({train.row_index()[t], train.col_index()[t]});
    values[t] = train.values()[t];
  }
  for (Index t = 0; t < extra_nnz; ++t) {
    omega.push_back(extra.omega[t]);
    values[train.nnz() + t] = extra.values[t];
  }
  return ObservedMatrix(train.rows(), train.cols(), std::move(omega),
                        std::move(values));
}

ObservedMatrix love_hate_attack(const ObservedMatrix& data,
                                double item_fraction, std::uint64_t seed) {
  if (!(item_fraction > 0 && item_fraction <= 1))
    throw ConfigError("love_hate_attack: item_fraction outside (0,1]");
  const double lo = data.values().minCoeff();
  const double hi = data.values().maxCoeff();
  const Index n_attack = static_cast<Index>(
      std::ceil(item_fraction * static_cast<double>(data.cols())));

  std::mt19937_64 rng(seed);
  std::vector<Index> items(data.cols());
  std::iota(items.begin(), items.end(), Index{0});
  std::shuffle(items.begin(), items.end(), rng);
  items.resize(n_attack);
  std::sort(items.begin(), items.end());

  Vector values = data.values();
  std::uniform_int_distribution<int> coin(0, 1);
  for (Index j : items) {
    const double target = coin(rng) ? hi : lo;
    for (Index s = data.col_ptr()[j]; s < data.col_ptr()[j + 1]; ++s)
      values[data.col_order()[s]] = target;
  }
  std::vector<IndexPair> omega(data.nnz());
  for (Index t = 0; t < data.nnz(); ++t)
    omega[t] = {data.row_index()[t], data.col_index()[t]};
  return ObservedMatrix(data.rows(), data.cols(), std::move(omega),
                        std::move(values));
}

namespace {

Vector mask_predictions(const FactorPair& factors, const EvalMask& mask) {
  if (mask.omega.empty()) throw DataError("evaluation mask is empty");
  const Index count = static_cast<Index>(mask.omega.size());
  Vector pred(count);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < count; ++t)
    pred[t] =
        factors.u.row(mask.omega[t].row).dot(factors.v.row(mask.omega[t].col));
  return pred;
}

}  // namespace

double rmse(const FactorPair& factors, const EvalMask& mask) {
  const Vector err = mask_predictions(factors, mask) - mask.values;
  return std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
}

double mae(const FactorPair& factors, const EvalMask& mask) {
  const Vector err = mask_predictions(factors, mask) - mask.values;
  return err.lpNorm<1>() / static_cast<double>(err.size());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',' || c == '\t' || c == ' ' || c == ';') {
      if (!cur.empty()) fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& s, long line_no) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("malformed number '" + s + "'", line_no);
  }
  if (pos != s.size())
    throw ParseError("malformed number '" + s + "'", line_no);
  return v;
}

long parse_long(const std::string& s, long line_no) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("malformed id '" + s + "'", line_no);
  }
  if (pos != s.size()) throw ParseError("malformed id '" + s + "'", line_no);
  return v;
}

}  // namespace

ObservedMatrix ingest_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::unordered_map<long, Index> user_map, item_map;
  std::vector<IndexPair> omega;
  std::vector<double> values;
  std::map<std::pair<Index, Index>, bool> seen;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == '%') continue;
    const auto fields = split_fields(line);
    if (fields.size() < 3)
      throw ParseError("expected at least 3 fields", line_no);
    const long user = parse_long(fields[0], line_no);
    const long item = parse_long(fields[1], line_no);
    const double rating = parse_double(fields[2], line_no);
    auto [uit, unew] =
        user_map.try_emplace(user, static_cast<Index>(user_map.size()));
    auto [iit, inew] =
        item_map.try_emplace(item, static_cast<Index>(item_map.size()));
    const std::pair<Index, Index> key{uit->second, iit->second};
    if (!seen.emplace(key, true).second)
      throw ParseError("duplicate (user, item) pair", line_no);
    omega.push_back({key.first, key.second});
    values.push_back(rating);
  }
  if (omega.empty()) throw ParseError("no ratings in '" + path + "'");
  return ObservedMatrix(static_cast<Index>(user_map.size()),
                        static_cast<Index>(item_map.size()), std::move(omega),
                        Eigen::Map<Vector>(values.data(),
                                           static_cast<Index>(values.size())));
}

FactorPair l2_baseline_fit(const ObservedMatrix& data, int rank,
                           double lambda, int sweeps, std::uint64_t seed) {
  if (rank < 1) throw ConfigError("l2_baseline_fit: rank must be >= 1");
  FactorPair factors =
      initialize(data.rows(), data.cols(), rank, InitSpec::gaussian(seed));
  factors.lambda = lambda;
  const double ridge = std::max(lambda, 1e-12);

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    // Rows of U given V.
#pragma omp parallel for schedule(dynamic, 16)
    for (Index i = 0; i < data.rows(); ++i) {
      Matrix gram = ridge * Matrix::Identity(rank, rank);
      Vector rhs = Vector::Zero(rank);
      for (Index t = data.row_ptr()[i]; t < data.row_ptr()[i + 1]; ++t) {
        const auto vr = factors.v.row(data.col_index()[t]);
        gram.noalias() += vr.transpose() * vr;
        rhs.noalias() += data.values()[t] * vr.transpose();
      }
      factors.u.row(i) = gram.ldlt().solve(rhs).transpose();
    }
    // Rows of V given U.
#pragma omp parallel for schedule(dynamic, 16)
    for (Index j = 0; j < data.cols(); ++j) {
      Matrix gram = ridge * Matrix::Identity(rank, rank);
      Vector rhs = Vector::Zero(rank);
      for (Index s = data.col_ptr()[j]; s < data.col_ptr()[j + 1]; ++s) {
        const Index t = data.col_order()[s];
        const auto ur = factors.u.row(data.row_index()[t]);
        gram.noalias() += ur.transpose() * ur;
        rhs.noalias() += data.values()[t] * ur.transpose();
      }
      factors.v.row(j) = gram.ldlt().solve(rhs).transpose();
    }
  }
  return factors;
}

void save_observed(const ObservedMatrix& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out.precision(17);
  out << "#rmfnl " << data.rows() << ' ' << data.cols() << '\n';
  for (Index t = 0; t < data.nnz(); ++t)
    out << data.row_index()[t] << '\t' << data.col_index()[t] << '\t'
        << data.values()[t] << '\n';
}

namespace {

struct TripleFile {
  Index m = 0, n = 0;
  std::vector<IndexPair> omega;
  std::vector<double> values;
};

TripleFile read_triples(const std::string& path, const char* magic) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'");
  std::istringstream header(line);
  std::string tag;
  TripleFile f;
  header >> tag >> f.m >> f.n;
  if (tag != magic || f.m <= 0 || f.n <= 0)
    throw ParseError("missing '" + std::string(magic) + " <m> <n>' header",
                     1);
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
    f.omega.push_back({parse_long(fields[0], line_no),
                       parse_long(fields[1], line_no)});
    f.values.push_back(parse_double(fields[2], line_no));
  }
  return f;
}

}  // namespace

ObservedMatrix load_observed(const std::string& path) {
  TripleFile f = read_triples(path, "#rmfnl");
  return ObservedMatrix(
      f.m, f.n, std::move(f.omega),
      Eigen::Map<Vector>(f.values.data(), static_cast<Index>(f.values.size())));
}

void save_mask(const EvalMask& mask, Index m, Index n,
               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out.precision(17);
  out << "#rmfnl-mask " << m << ' ' << n << '\n';
  for (std::size_t t = 0; t < mask.omega.size(); ++t)
    out << mask.omega[t].row << '\t' << mask.omega[t].col << '\t'
        << mask.values[static_cast<Index>(t)] << '\n';
}

EvalMask load_mask(const std::string& path) {
  TripleFile f = read_triples(path, "#rmfnl-mask");
  EvalMask mask;
  mask.omega = std::move(f.omega);
  mask.values = Eigen::Map<Vector>(f.values.data(),
                                   static_cast<Index>(f.values.size()));
  return mask;
}

ObservedMatrix load_any(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  in.close();
  if (line.rfind("#rmfnl ", 0) == 0) return load_observed(path);
  return ingest_ratings(path);
}

}  // namespace rmfnl
