#include <cmath>

#include "h2dft/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace h2dft::kernels {

namespace {

std::size_t num_blocks(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

double block_dot(const double* x, const double* y, std::size_t begin, std::size_t end) {
  double s = 0;
  for (std::size_t i = begin; i < end; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

namespace serial {

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double total = 0;
  for (std::size_t b = 0; b < num_blocks(n); ++b) {
    const std::size_t begin = b * kReductionBlock;
    total += block_dot(x.data(), y.data(), begin, std::min(n, begin + kReductionBlock));
  }
  return total;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void xpay(std::span<const double> x, double a, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + a * y[i];
}

void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

void spmv(const CsrView& A, std::span<const double> x, std::span<double> y) {
  const std::size_t n = A.row_ptr.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) s += A.vals[k] * x[A.cols[k]];
    y[i] = s;
  }
}

}  // namespace serial

namespace parallel {

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t nb = num_blocks(n);
  std::vector<double> partial(nb);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    partial[b] = block_dot(x.data(), y.data(), begin, std::min(n, begin + kReductionBlock));
  }
  double total = 0;
  for (double p : partial) total += p;
  return total;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay(std::span<const double> x, double a, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale(double a, std::span<double> x) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) x[i] *= a;
}

void spmv(const CsrView& A, std::span<const double> x, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(A.row_ptr.size()) - 1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double s = 0;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) s += A.vals[k] * x[A.cols[k]];
    y[i] = s;
  }
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace h2dft::kernels
