#include <immintrin.h>

#include "qmet/kernels.hpp"

namespace qmet::kernels::avx2 {

void axpy(double alpha, const double* x, double* y, std::size_t len) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= len; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < len; ++i) y[i] += alpha * x[i];
}

static inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* x, const double* y, std::size_t len) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= len; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < len; ++i) sum += x[i] * y[i];
  return sum;
}

void weighted_gram(const double* rows, const double* weights, std::size_t m, std::size_t p,
                   double* out) {
  for (std::size_t k = 0; k < p * p; ++k) out[k] = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double* r = rows + l * p;
    for (std::size_t i = 0; i < p; ++i) {
      const double a = weights[l] * r[i];
      const __m256d va = _mm256_set1_pd(a);
      double* o = out + i * p;
      std::size_t j = 0;
      for (; j + 4 <= p; j += 4) {
        _mm256_storeu_pd(o + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(r + j), _mm256_loadu_pd(o + j)));
      }
      for (; j < p; ++j) o[j] += a * r[j];
    }
  }
}

}  // namespace qmet::kernels::avx2
