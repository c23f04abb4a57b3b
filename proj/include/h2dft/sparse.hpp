#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "h2dft/kernels.hpp"

namespace h2dft {

using Vector = std::vector<double>;

/// Compressed-row sparsity with sorted column indices.
struct SparsityPattern {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> cols;

  std::size_t nnz() const { return cols.size(); }
  /// Position of (i, j) in `cols`, or -1.
  int find(int i, int j) const;
  /// Position of the diagonal entry of every row.
  std::vector<int> diagonal_positions() const;
};

/// Square sparse matrix over mesh vertices. The pattern is shared between
/// operators assembled on the same mesh so that linear combinations are cheap.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::shared_ptr<const SparsityPattern> pattern, Vector values);

  int size() const { return pattern_ ? pattern_->n : 0; }
  const SparsityPattern& pattern() const { return *pattern_; }
  const std::shared_ptr<const SparsityPattern>& pattern_ptr() const { return pattern_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double at(int i, int j) const;
  Vector diagonal() const;

  void apply(std::span<const double> x, std::span<double> y) const;
  Vector apply(std::span<const double> x) const;
  CsrView view() const { return {pattern_->row_ptr, pattern_->cols, values_}; }

  /// this*a + other*b on the shared pattern.
  SparseOperator combine(double a, const SparseOperator& other, double b) const;

  /// Rows and columns of constrained vertices are cleared and the diagonal set to 1.
  SparseOperator constrained(std::span<const char> fixed) const;

  double max_asymmetry() const;

  void write_matrix_market(std::ostream& os) const;

 private:
  std::shared_ptr<const SparsityPattern> pattern_;
  Vector values_;
};

/// Sparse matrix product helpers for the multigrid transfers. `P` is
/// rectangular (fine x coarse) and stored as rows of (col, weight).
struct Prolongation {
  int fine = 0, coarse = 0;
  std::vector<int> row_ptr;
  std::vector<int> cols;
  std::vector<double> weights;

  void prolong(std::span<const double> coarse_vec, std::span<double> fine_vec) const;
  void restrict_to(std::span<const double> fine_vec, std::span<double> coarse_vec) const;
};

/// Galerkin product P^T A P. The result pattern depends only on the patterns
/// of A and P and always contains the diagonal.
SparseOperator galerkin_product(const SparseOperator& A, const Prolongation& P);

}  // namespace h2dft
