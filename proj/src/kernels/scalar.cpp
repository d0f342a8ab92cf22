#include "qmet/kernels.hpp"

namespace qmet::kernels::scalar {

void axpy(double alpha, const double* x, double* y, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

double dot(const double* x, const double* y, std::size_t len) {
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) sum += x[i] * y[i];
  return sum;
}

void weighted_gram(const double* rows, const double* weights, std::size_t m, std::size_t p,
                   double* out) {
  for (std::size_t k = 0; k < p * p; ++k) out[k] = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double* r = rows + l * p;
    for (std::size_t i = 0; i < p; ++i) {
      const double a = weights[l] * r[i];
      for (std::size_t j = 0; j < p; ++j) out[i * p + j] += a * r[j];
    }
  }
}

}  // namespace qmet::kernels::scalar
