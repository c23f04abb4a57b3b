#include "h2dft/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace h2dft {

int SparsityPattern::find(int i, int j) const {
  const auto begin = cols.begin() + row_ptr[i];
  const auto end = cols.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  return (it != end && *it == j) ? static_cast<int>(it - cols.begin()) : -1;
}

std::vector<int> SparsityPattern::diagonal_positions() const {
  std::vector<int> d(n);
  for (int i = 0; i < n; ++i) {
    d[i] = find(i, i);
    if (d[i] < 0) throw std::logic_error("sparsity pattern lacks a diagonal entry");
  }
  return d;
}

SparseOperator::SparseOperator(std::shared_ptr<const SparsityPattern> pattern, Vector values)
    : pattern_(std::move(pattern)), values_(std::move(values)) {
  if (values_.size() != pattern_->nnz()) throw std::invalid_argument("value count does not match pattern");
}

double SparseOperator::at(int i, int j) const {
  const int k = pattern_->find(i, j);
  return k < 0 ? 0.0 : values_[k];
}

Vector SparseOperator::diagonal() const {
  Vector d(size());
  const auto pos = pattern_->diagonal_positions();
  for (int i = 0; i < size(); ++i) d[i] = values_[pos[i]];
  return d;
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  kernels::spmv(view(), x, y);
}

Vector SparseOperator::apply(std::span<const double> x) const {
  Vector y(size());
  apply(x, y);
  return y;
}

SparseOperator SparseOperator::combine(double a, const SparseOperator& other, double b) const {
  if (other.pattern_ != pattern_) throw std::invalid_argument("combine requires a shared pattern");
  Vector v(values_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a * values_[k] + b * other.values_[k];
  return {pattern_, std::move(v)};
}

SparseOperator SparseOperator::constrained(std::span<const char> fixed) const {
  Vector v = values_;
  const auto& p = *pattern_;
  for (int i = 0; i < p.n; ++i) {
    for (int k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      const int j = p.cols[k];
      if (fixed[i] || fixed[j]) v[k] = (i == j) ? 1.0 : 0.0;
    }
  }
  return {pattern_, std::move(v)};
}

double SparseOperator::max_asymmetry() const {
  double worst = 0;
  const auto& p = *pattern_;
  for (int i = 0; i < p.n; ++i) {
    for (int k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      worst = std::max(worst, std::abs(values_[k] - at(p.cols[k], i)));
    }
  }
  return worst;
}

void SparseOperator::write_matrix_market(std::ostream& os) const {
  const auto& p = *pattern_;
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << p.n << ' ' << p.n << ' ' << p.nnz() << '\n' << std::setprecision(17);
  for (int i = 0; i < p.n; ++i) {
    for (int k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      os << i + 1 << ' ' << p.cols[k] + 1 << ' ' << values_[k] << '\n';
    }
  }
}

void Prolongation::prolong(std::span<const double> coarse_vec, std::span<double> fine_vec) const {
  const std::ptrdiff_t n = fine;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += weights[k] * coarse_vec[cols[k]];
    fine_vec[i] = s;
  }
}

void Prolongation::restrict_to(std::span<const double> fine_vec, std::span<double> coarse_vec) const {
  std::fill(coarse_vec.begin(), coarse_vec.end(), 0.0);
  for (int i = 0; i < fine; ++i) {
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) coarse_vec[cols[k]] += weights[k] * fine_vec[i];
  }
}

SparseOperator galerkin_product(const SparseOperator& A, const Prolongation& P) {
  // Transpose of P: for every coarse column, the fine rows that touch it.
  std::vector<std::vector<std::pair<int, double>>> pt(P.coarse);
  for (int i = 0; i < P.fine; ++i) {
    for (int k = P.row_ptr[i]; k < P.row_ptr[i + 1]; ++k) pt[P.cols[k]].emplace_back(i, P.weights[k]);
  }
  const auto& ap = A.pattern();
  const auto av = A.values();
  auto pattern = std::make_shared<SparsityPattern>();
  pattern->n = P.coarse;
  pattern->row_ptr.assign(P.coarse + 1, 0);
  Vector values;
  Vector acc(P.coarse, 0.0);
  std::vector<int> marker(P.coarse, -1);
  std::vector<int> touched;
  for (int I = 0; I < P.coarse; ++I) {
    touched.clear();
    // the diagonal is always stored, even for rows the transfer leaves empty
    marker[I] = I;
    acc[I] = 0.0;
    touched.push_back(I);
    for (const auto& [i, wi] : pt[I]) {
      for (int k = ap.row_ptr[i]; k < ap.row_ptr[i + 1]; ++k) {
        const int j = ap.cols[k];
        const double a = wi * av[k];
        for (int q = P.row_ptr[j]; q < P.row_ptr[j + 1]; ++q) {
          const int J = P.cols[q];
          if (marker[J] != I) {
            marker[J] = I;
            acc[J] = 0.0;
            touched.push_back(J);
          }
          acc[J] += a * P.weights[q];
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int J : touched) {
      pattern->cols.push_back(J);
      values.push_back(acc[J]);
    }
    pattern->row_ptr[I + 1] = static_cast<int>(pattern->cols.size());
  }
  return {std::move(pattern), std::move(values)};
}

}  // namespace h2dft
