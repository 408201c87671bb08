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

#include "rmfnl/sparse.hpp"

#include <algorithm>
#include <numeric>

namespace rmfnl {

ObservedMatrix::ObservedMatrix(Index rows, Index cols,
                               std::vector<IndexPair> omega, Vector values)
    : rows_(rows), cols_(cols) {
  const Index nnz = static_cast<Index>(omega.size());
  if (rows <= 0 || cols <= 0)
    throw DimensionError("ObservedMatrix: dimensions must be positive");
  if (values.size() != nnz)
    throw DimensionError("ObservedMatrix: values length does not match omega");
  if (nnz == 0) throw DataError("ObservedMatrix: empty observation set");

  for (const auto& p : omega) {
    if (p.row < 0 || p.row >= rows || p.col < 0 || p.col >= cols)
      throw DataError("ObservedMatrix: index pair out of range");
  }

  // Canonical row-major order.
  std::vector<Index> perm(omega.size());
  std::iota(perm.begin(), perm.end(), Index{0});
  std::sort(perm.begin(), perm.end(), [&](Index a, Index b) {
    const auto& pa = omega[a];
    const auto& pb = omega[b];
    return pa.row != pb.row ? pa.row < pb.row : pa.col < pb.col;
  });

  row_index_.resize(nnz);
  col_index_.resize(nnz);
  values_.resize(nnz);
  for (Index t = 0; t < nnz; ++t) {
    row_index_[t] = omega[perm[t]].row;
    col_index_[t] = omega[perm[t]].col;
    values_[t] = values[perm[t]];
    if (t > 0 && row_index_[t] == row_index_[t - 1] &&
        col_index_[t] == col_index_[t - 1])
      throw DataError("ObservedMatrix: duplicate index pair");
  }

  row_ptr_.assign(rows + 1, 0);
  for (Index t = 0; t < nnz; ++t) ++row_ptr_[row_index_[t] + 1];
  for (Index i = 0; i < rows; ++i) row_ptr_[i + 1] += row_ptr_[i];

  col_ptr_.assign(cols + 1, 0);
  for (Index t = 0; t < nnz; ++t) ++col_ptr_[col_index_[t] + 1];
  for (Index j = 0; j < cols; ++j) col_ptr_[j + 1] += col_ptr_[j];
  col_order_.resize(nnz);
  std::vector<Index> next(col_ptr_.begin(), col_ptr_.end() - 1);
  for (Index t = 0; t < nnz; ++t) col_order_[next[col_index_[t]]++] = t;

  for (Index i = 0; i < rows; ++i)
    if (row_ptr_[i] == row_ptr_[i + 1])
      throw DataError("ObservedMatrix: row " + std::to_string(i) +
                      " has no observed entries");
  for (Index j = 0; j < cols; ++j)
    if (col_ptr_[j] == col_ptr_[j + 1])
      throw DataError("ObservedMatrix: column " + std::to_string(j) +
                      " has no observed entries");
}

SparseOnOmega lift(const ObservedMatrix& pattern, const Vector& x) {
  if (x.size() != pattern.nnz())
    throw DimensionError("lift: vector length does not match nnz");
  return SparseOnOmega(pattern, x);
}

Vector flatten(const SparseOnOmega& x) { return x.entries(); }

Matrix sparse_dense_product(const SparseOnOmega& x, const Matrix& d) {
  const ObservedMatrix& p = x.pattern();
  if (d.rows() != p.cols())
    throw DimensionError("sparse_dense_product: inner dimensions disagree");
  Matrix out = Matrix::Zero(p.rows(), d.cols());
  const auto& row_ptr = p.row_ptr();
  const auto& col_index = p.col_index();
  const Vector& e = x.entries();
#pragma omp parallel for schedule(dynamic, 64)
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index t = row_ptr[i]; t < row_ptr[i + 1]; ++t)
      out.row(i) += e[t] * d.row(col_index[t]);
  }
  return out;
}

Matrix sparse_dense_product_transposed(const SparseOnOmega& x,
                                       const Matrix& d) {
  const ObservedMatrix& p = x.pattern();
  if (d.rows() != p.rows())
    throw DimensionError(
        "sparse_dense_product_transposed: inner dimensions disagree");
  Matrix out = Matrix::Zero(p.cols(), d.cols());
  const auto& col_ptr = p.col_ptr();
  const auto& col_order = p.col_order();
  const auto& row_index = p.row_index();
  const Vector& e = x.entries();
#pragma omp parallel for schedule(dynamic, 64)
  for (Index j = 0; j < p.cols(); ++j) {
    for (Index s = col_ptr[j]; s < col_ptr[j + 1]; ++s) {
      const Index t = col_order[s];
      out.row(j) += e[t] * d.row(row_index[t]);
    }
  }
  return out;
}

Vector gather_product(const Matrix& a, const Matrix& b,
                      const ObservedMatrix& pattern) {
  if (a.rows() != pattern.rows() || b.rows() != pattern.cols() ||
      a.cols() != b.cols())
    throw DimensionError("gather_product: dimensions disagree with pattern");
  const Index nnz = pattern.nnz();
  const auto& row_index = pattern.row_index();
  const auto& col_index = pattern.col_index();
  Vector out(nnz);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < nnz; ++t)
    out[t] = a.row(row_index[t]).dot(b.row(col_index[t]));
  return out;
}

std::pair<Vector, Vector> row_col_sums(const SparseOnOmega& x) {
  const ObservedMatrix& p = x.pattern();
  const Vector& e = x.entries();
  Vector rs = Vector::Zero(p.rows());
  Vector cs = Vector::Zero(p.cols());
  const auto& row_ptr = p.row_ptr();
  const auto& col_ptr = p.col_ptr();
  const auto& col_order = p.col_order();
#pragma omp parallel
  {
#pragma omp for schedule(static) nowait
    for (Index i = 0; i < p.rows(); ++i)
      for (Index t = row_ptr[i]; t < row_ptr[i + 1]; ++t) rs[i] += e[t];
#pragma omp for schedule(static)
    for (Index j = 0; j < p.cols(); ++j)
      for (Index s = col_ptr[j]; s < col_ptr[j + 1]; ++s)
        cs[j] += e[col_order[s]];
  }
  return {std::move(rs), std::move(cs)};
}

namespace serial {

Matrix sparse_dense_product(const SparseOnOmega& x, const Matrix& d) {
  const ObservedMatrix& p = x.pattern();
  if (d.rows() != p.cols())
    throw DimensionError("sparse_dense_product: inner dimensions disagree");
  Matrix out = Matrix::Zero(p.rows(), d.cols());
  for (Index t = 0; t < p.nnz(); ++t)
    out.row(p.row_index()[t]) += x.entries()[t] * d.row(p.col_index()[t]);
  return out;
}

Matrix sparse_dense_product_transposed(const SparseOnOmega& x,
                                       const Matrix& d) {
  const ObservedMatrix& p = x.pattern();
  if (d.rows() != p.rows())
    throw DimensionError(
        "sparse_dense_product_transposed: inner dimensions disagree");
  Matrix out = Matrix::Zero(p.cols(), d.cols());
  for (Index t = 0; t < p.nnz(); ++t)
    out.row(p.col_index()[t]) += x.entries()[t] * d.row(p.row_index()[t]);
  return out;
}

Vector gather_product(const Matrix& a, const Matrix& b,
                      const ObservedMatrix& pattern) {
  if (a.rows() != pattern.rows() || b.rows() != pattern.cols() ||
      a.cols() != b.cols())
    throw DimensionError("gather_product: dimensions disagree with pattern");
  Vector out(pattern.nnz());
  for (Index t = 0; t < pattern.nnz(); ++t)
    out[t] =
        a.row(pattern.row_index()[t]).dot(b.row(pattern.col_index()[t]));
  return out;
}

std::pair<Vector, Vector> row_col_sums(const SparseOnOmega& x) {
  const ObservedMatrix& p = x.pattern();
  Vector rs = Vector::Zero(p.rows());
  Vector cs = Vector::Zero(p.cols());
  for (Index t = 0; t < p.nnz(); ++t) {
    rs[p.row_index()[t]] += x.entries()[t];
    cs[p.col_index()[t]] += x.entries()[t];
  }
  return {std::move(rs), std::move(cs)};
}

}  // namespace serial

}  // namespace rmfnl
