#pragma once

// Vector and sparse-matrix kernels.
//
// Every kernel has a plain serial version in `serial::` that is kept as the
// reference for tests, and an OpenMP version in `parallel::`. Reductions are
// done over fixed-size blocks whose partial sums are combined in block order,
// so results are bit-identical for any thread count and identical to the
// serial reference.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace h2dft {

struct CsrView {
  std::span<const int> row_ptr;
  std::span<const int> cols;
  std::span<const double> vals;
};

namespace kernels {

inline constexpr std::size_t kReductionBlock = 4096;

namespace serial {
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);       // y += a x
void xpay(std::span<const double> x, double a, std::span<double> y);       // y = x + a y
void scale(double a, std::span<double> x);
void spmv(const CsrView& A, std::span<const double> x, std::span<double> y);
}  // namespace serial

namespace parallel {
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double a, std::span<double> y);
void scale(double a, std::span<double> x);
void spmv(const CsrView& A, std::span<const double> x, std::span<double> y);
}  // namespace parallel

using parallel::axpy;
using parallel::dot;
using parallel::scale;
using parallel::spmv;
using parallel::xpay;

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

int max_threads();

}  // namespace kernels
}  // namespace h2dft
