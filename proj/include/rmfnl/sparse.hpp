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

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "rmfnl/errors.hpp"

namespace rmfnl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct IndexPair {
  Index row;
  Index col;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

/// Sparse data matrix restricted to an observation index set.
///
/// The index set is kept in canonical row-major order, so flattening a
/// matrix supported on it and lifting the result back is the identity.
/// Every row and column must contain at least one observation; patterns
/// with an empty row or column are rejected at construction, as are
/// duplicate or out-of-range indices.
///
/// Immutable after construction and safe to share across threads.
class ObservedMatrix {
 public:
  ObservedMatrix(Index rows, Index cols, std::vector<IndexPair> omega,
                 Vector values);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(row_index_.size()); }

  // Index pairs in canonical order, split by coordinate.
  const std::vector<Index>& row_index() const { return row_index_; }
  const std::vector<Index>& col_index() const { return col_index_; }
  const Vector& values() const { return values_; }

  // Entries of row i occupy positions [row_ptr()[i], row_ptr()[i+1]) of
  // the canonical ordering.
  const std::vector<Index>& row_ptr() const { return row_ptr_; }

  // col_order()[col_ptr()[j] .. col_ptr()[j+1]) lists the positions (in
  // canonical order) of the entries of column j.
  const std::vector<Index>& col_ptr() const { return col_ptr_; }
  const std::vector<Index>& col_order() const { return col_order_; }

 private:
  Index rows_;
  Index cols_;
  std::vector<Index> row_index_;
  std::vector<Index> col_index_;
  Vector values_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_ptr_;
  std::vector<Index> col_order_;
};

/// A real matrix supported on the observation set of a parent
/// ObservedMatrix, stored as its nnz entries in canonical order.
class SparseOnOmega {
 public:
  SparseOnOmega(const ObservedMatrix& pattern, Vector entries)
      : pattern_(&pattern), entries_(std::move(entries)) {
    if (entries_.size() != pattern.nnz())
      throw DimensionError("SparseOnOmega: entry count does not match nnz");
  }

  const ObservedMatrix& pattern() const { return *pattern_; }
  const Vector& entries() const { return entries_; }
  Index rows() const { return pattern_->rows(); }
  Index cols() const { return pattern_->cols(); }

 private:
  const ObservedMatrix* pattern_;
  Vector entries_;
};

// The lift operator: places x_t at the t-th observed position.
SparseOnOmega lift(const ObservedMatrix& pattern, const Vector& x);

// Inverse of lift: entries in canonical omega order.
Vector flatten(const SparseOnOmega& x);

// X * D for X supported on omega and dense D (cols(X) x r). O(nnz r).
Matrix sparse_dense_product(const SparseOnOmega& x, const Matrix& d);

// X^T * D with dense D (rows(X) x r). O(nnz r).
Matrix sparse_dense_product_transposed(const SparseOnOmega& x,
                                       const Matrix& d);

// result_t = <row i_t of A, row j_t of B>, i.e. A B^T restricted to the
// observed positions. O(nnz r).
Vector gather_product(const Matrix& a, const Matrix& b,
                      const ObservedMatrix& pattern);

// Row and column sums in a single pass over the entries.
std::pair<Vector, Vector> row_col_sums(const SparseOnOmega& x);

// Serial reference kernels. Plain single-threaded loops kept as the
// ground truth the parallel kernels are tested and benchmarked against.
namespace serial {

Matrix sparse_dense_product(const SparseOnOmega& x, const Matrix& d);
Matrix sparse_dense_product_transposed(const SparseOnOmega& x,
                                       const Matrix& d);
Vector gather_product(const Matrix& a, const Matrix& b,
                      const ObservedMatrix& pattern);
std::pair<Vector, Vector> row_col_sums(const SparseOnOmega& x);

}  // namespace serial

}  // namespace rmfnl
