#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// SIMD variants chosen at runtime. Complex arrays are passed as interleaved
// (re, im) doubles, which is the layout of std::complex<double> and of
// Eigen's complex matrices.

#include <cstddef>
#include <string_view>

#include "qmet/types.hpp"

namespace qmet::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t len);
  // sum_i x_i * y_i
  double (*dot)(const double* x, const double* y, std::size_t len);
  // out(i, j) = sum_l w_l * rows(l, i) * rows(l, j); rows is m x p
  // row-major, out is p x p row-major and is overwritten.
  void (*weighted_gram)(const double* rows, const double* weights, std::size_t m,
                        std::size_t p, double* out);
  Isa isa;
};

namespace scalar {
void axpy(double alpha, const double* x, double* y, std::size_t len);
double dot(const double* x, const double* y, std::size_t len);
void weighted_gram(const double* rows, const double* weights, std::size_t m, std::size_t p,
                   double* out);
}  // namespace scalar

#if defined(QMET_HAVE_AVX2)
namespace avx2 {
void axpy(double alpha, const double* x, double* y, std::size_t len);
double dot(const double* x, const double* y, std::size_t len);
void weighted_gram(const double* rows, const double* weights, std::size_t m, std::size_t p,
                   double* out);
}  // namespace avx2
#endif

bool supported(Isa isa);
std::string_view name(Isa isa);

// Table for a specific ISA; throws ConfigError if the CPU or build lacks it.
const KernelTable& table(Isa isa);

// Best supported table, unless the QMET_SIMD environment variable pins
// "scalar" or "avx2". Resolved once per process.
const KernelTable& active();

// Complex helpers on top of the active table.
inline void caxpy(double alpha, const Complex* x, Complex* y, std::size_t n) {
  active().axpy(alpha, reinterpret_cast<const double*>(x), reinterpret_cast<double*>(y), 2 * n);
}

// Re sum_i conj(x_i) * y_i
inline double real_inner(const Complex* x, const Complex* y, std::size_t n) {
  return active().dot(reinterpret_cast<const double*>(x), reinterpret_cast<const double*>(y),
                      2 * n);
}

}  // namespace qmet::kernels
