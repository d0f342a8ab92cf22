#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "qmet/types.hpp"

namespace qmet {

// n x n complex matrix with |U^dag U - I|_F <= tolerance, checked on construction.
class UnitaryPoint {
 public:
  static constexpr double kTolerance = 1e-9;

  UnitaryPoint() = default;
  explicit UnitaryPoint(CMatrix u, double tolerance = kTolerance);

  static UnitaryPoint identity(std::size_t n);

  const CMatrix& matrix() const { return u_; }
  std::size_t dim() const { return static_cast<std::size_t>(u_.rows()); }

 private:
  CMatrix u_;
};

double unitarity_defect(const CMatrix& u);

// Nearest unitary in Frobenius norm (polar factor via SVD).
CMatrix polar_project(const CMatrix& m);

// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
// R's diagonal divided out.
CMatrix haar_unitary(std::size_t n, std::mt19937_64& rng);

// (1/sqrt 2) [[1, e^{i phi}], [1, -e^{i phi}]]
CMatrix two_mode_unitary(double phi);

}  // namespace qmet
