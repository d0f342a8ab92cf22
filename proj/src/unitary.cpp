#include "qmet/unitary.hpp"

#include <cmath>
#include <string>

#include "qmet/errors.hpp"

namespace qmet {

double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm();
}

UnitaryPoint::UnitaryPoint(CMatrix u, double tolerance) : u_(std::move(u)) {
  if (u_.rows() != u_.cols()) throw ConfigError("unitary must be square");
  const double defect = unitarity_defect(u_);
  if (!(defect <= tolerance)) {
    throw ConfigError("matrix is not unitary: |U^dag U - I|_F = " + std::to_string(defect));
  }
}

UnitaryPoint UnitaryPoint::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return UnitaryPoint(CMatrix::Identity(k, k));
}

CMatrix polar_project(const CMatrix& m) {
  const Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

CMatrix haar_unitary(std::size_t n, std::mt19937_64& rng) {
  const auto k = static_cast<Eigen::Index>(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix z(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) z(i, j) = Complex(normal(rng), normal(rng));
  const Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(k, k);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

CMatrix two_mode_unitary(double phi) {
  const Complex e = std::polar(1.0, phi);
  CMatrix u(2, 2);
  u << 1.0, e, 1.0, -e;
  return u / std::sqrt(2.0);
}

}  // namespace qmet
