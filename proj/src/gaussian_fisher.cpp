#include "qmet/gaussian_fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qmet/errors.hpp"

namespace qmet {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  const Eigen::Index m = b.rows();
  CMatrix out(a.rows() * m, a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * m, j * b.cols(), m, b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix gamma_from_sigma(const CMatrix& sigma) {
  const Eigen::Index n = sigma.rows() / 2;
  CMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = sigma(2 * i + 1, 2 * j) - (i == j ? 0.5 : 0.0);
  return g;
}

RMatrix symmetrized(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

CMatrix covariance_block_form(const CMatrix& gamma, bool add_vacuum) {
  const Eigen::Index n = gamma.rows();
  CMatrix s = CMatrix::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double vac = (add_vacuum && i == j) ? 0.5 : 0.0;
      s(2 * i, 2 * j + 1) = gamma(j, i) + vac;  // <b_i b_j^dag> symmetrised
      s(2 * i + 1, 2 * j) = gamma(i, j) + vac;  // <b_i^dag b_j> symmetrised
    }
  }
  return s;
}

CovarianceMatrix covariance_from_coherence(const CoherenceMatrix& gamma) {
  CovarianceMatrix cov;
  cov.sigma = covariance_block_form(gamma.gamma, true);
  cov.dsigma.reserve(gamma.dgamma.size());
  for (const auto& d : gamma.dgamma) cov.dsigma.push_back(covariance_block_form(d, false));
  return cov;
}

CMatrix symplectic_form(std::size_t modes) {
  const Eigen::Index n = idx(modes);
  CMatrix omega = CMatrix::Zero(2 * n, 2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

CMatrix apply_moment_operator(const CMatrix& sigma, const CMatrix& x) {
  const CMatrix omega = symplectic_form(static_cast<std::size_t>(sigma.rows() / 2));
  return sigma * x * sigma.transpose() + 0.25 * omega * x * omega.transpose();
}

GaussianFisher::GaussianFisher(CovarianceMatrix cov) : cov_(std::move(cov)) {
  const std::size_t n = cov_.modes();
  if (cov_.sigma.rows() != cov_.sigma.cols() || cov_.sigma.rows() % 2 != 0) {
    throw ConfigError("covariance matrix must be 2n x 2n");
  }

  // Mfrak restricted to the b^dag b sector has eigenvalues n_a n_b + (n_a + n_b)/2
  // over the eigenvalues n_a of Gamma; it is singular iff Gamma has a zero
  // eigenvalue (a pure component).
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(gamma_from_sigma(cov_.sigma), Eigen::EigenvaluesOnly);
  const double nmin = es.eigenvalues().minCoeff();
  const double weakest = nmin * (nmin + 1.0);
  if (!(weakest > 1e-14)) {
    throw SingularMatrixError("moment operator is singular: coherence matrix has eigenvalue " +
                                  std::to_string(nmin) + " (pure-state component)",
                              weakest);
  }

  const CMatrix omega = symplectic_form(n);
  moment_ = kron(cov_.sigma, cov_.sigma) + 0.25 * kron(omega, omega);
  const Eigen::PartialPivLU<CMatrix> lu(moment_);

  const Eigen::Index dim = cov_.sigma.rows();
  coeffs_.reserve(cov_.params());
  for (const auto& ds : cov_.dsigma) {
    const CVector rhs = Eigen::Map<const CVector>(ds.data(), ds.size());
    CVector sol = lu.solve(rhs);
    const double residual = (moment_ * sol - rhs).norm();
    const double scale = rhs.norm();
    if (scale > 0.0 && !(residual <= 1e-12 * scale * std::max(1.0, moment_.norm()))) {
      throw SingularMatrixError("moment operator solve did not reach tolerance (relative residual " +
                                    std::to_string(residual / scale) + ")",
                                weakest);
    }
    coeffs_.push_back(Eigen::Map<CMatrix>(sol.data(), dim, dim));
  }
}

FisherMatrix GaussianFisher::qfi() const {
  const std::size_t p = cov_.params();
  RMatrix f(idx(p), idx(p));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      f(idx(i), idx(j)) = 0.5 * (cov_.dsigma[j].array() * coeffs_[i].array()).sum().real();
    }
  }
  return {symmetrized(f), FisherKind::quantum};
}

SldMatrix GaussianFisher::sld(std::size_t i) const {
  const CMatrix& x = coeffs_.at(i);
  const Eigen::Index n = idx(cov_.modes());
  SldMatrix out{CMatrix(n, n), i};
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) out.m(j, k) = x(2 * j + 1, 2 * k);
  return out;
}

FisherMatrix qfi_matrix(const CovarianceMatrix& cov) { return GaussianFisher(cov).qfi(); }

SldMatrix sld_matrix(const CovarianceMatrix& cov, std::size_t i) {
  if (i >= cov.params()) throw ConfigError("parameter index out of range");
  return GaussianFisher(cov).sld(i);
}

CMatrix sld_coefficient_array(const SldMatrix& sld) {
  const Eigen::Index n = sld.m.rows();
  CMatrix x = CMatrix::Zero(2 * n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      x(2 * j + 1, 2 * k) = sld.m(j, k);
      x(2 * k, 2 * j + 1) = sld.m(j, k);
    }
  }
  return x;
}

DetectionModes sld_detection_unitary(const SldMatrix& sld) { return sld_detection_unitary(sld.m); }

DetectionModes sld_detection_unitary(const CMatrix& hermitian) {
  const Eigen::Index n = hermitian.rows();
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");

  // Descending order.
  RVector lambda = es.eigenvalues().reverse();
  CMatrix q = es.eigenvectors().rowwise().reverse();

  const double tol = 1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && std::abs(lambda[end] - lambda[start]) <= tol) ++end;
    const Eigen::Index size = end - start;
    if (size > 1) {
      const CMatrix basis = q.middleCols(start, size);
      const CMatrix proj = basis * basis.adjoint();
      std::vector<bool> used(static_cast<std::size_t>(n), false);
      for (Eigen::Index c = 0; c < size; ++c) {
        Eigen::Index best = -1;
        double best_norm = -1.0;
        CVector best_vec;
        for (Eigen::Index e = 0; e < n; ++e) {
          if (used[static_cast<std::size_t>(e)]) continue;
          CVector v = proj.col(e);
          for (Eigen::Index prev = 0; prev < c; ++prev) {
            const CVector u = q.col(start + prev);
            v -= u * u.dot(v);
          }
          const double nv = v.norm();
          if (nv > best_norm + 1e-12) {
            best = e;
            best_norm = nv;
            best_vec = v;
          }
        }
        used[static_cast<std::size_t>(best)] = true;
        q.col(start + c) = best_vec / best_norm;
      }
      lambda.segment(start, size).setConstant(lambda.segment(start, size).mean());
    }
    start = end;
  }

  for (Eigen::Index c = 0; c < n; ++c) {
    const double maxabs = q.col(c).cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    while (std::abs(q(pivot, c)) < maxabs - 1e-12) ++pivot;
    const Complex phase = q(pivot, c) / std::abs(q(pivot, c));
    q.col(c) *= std::conj(phase);
  }

  return {q.adjoint(), lambda};
}

double condition_number(const FisherMatrix& f) {
  const Eigen::SelfAdjointEigenSolver<RMatrix> es(symmetrized(f.matrix), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double scalar_bound(const FisherMatrix& f, const std::optional<RMatrix>& w, double max_condition) {
  const Eigen::Index p = f.matrix.rows();
  if (p == 0 || f.matrix.cols() != p) throw ConfigError("Fisher matrix must be square and non-empty");
  if (w && (w->rows() != p || w->cols() != p)) throw ConfigError("weight matrix has wrong size");

  const Eigen::SelfAdjointEigenSolver<RMatrix> es(symmetrized(f.matrix));
  const RVector& lambda = es.eigenvalues();
  const double hi = lambda.maxCoeff();
  const double lo = lambda.minCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(hi > 0.0) || !(cond <= max_condition)) {
    throw UnidentifiableError("Fisher matrix is singular (condition number " + std::to_string(cond) +
                                  "); parameters are not identifiable",
                              es.eigenvectors().col(0), cond);
  }
  double bound = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    const RVector v = es.eigenvectors().col(k);
    const double wk = w ? v.dot(*w * v) : 1.0;
    bound += wk / lambda[k];
  }
  return bound;
}

Complex commutation_on_average(const SldMatrix& mi, const SldMatrix& mj, const CMatrix& gamma) {
  if (mi.m.rows() != gamma.rows() || mj.m.rows() != gamma.rows()) {
    throw ConfigError("SLD and coherence matrix dimensions differ");
  }
  const CMatrix comm = mi.m * mj.m - mj.m * mi.m;
  return (comm * gamma.transpose()).trace();
}

double relative_commutation(const SldMatrix& mi, const SldMatrix& mj, const CMatrix& gamma) {
  const double scale = mi.m.norm() * mj.m.norm() * gamma.norm();
  if (scale == 0.0) return 0.0;
  return std::abs(commutation_on_average(mi, mj, gamma)) / scale;
}

double gain_factor(const FisherMatrix& f) {
  const Eigen::Index p = f.matrix.rows();
  double diag_sum = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(f.matrix(i, i) > 0.0)) throw UnidentifiableError("Fisher diagonal entry is not positive", RVector::Unit(p, i), 0.0);
    diag_sum += 1.0 / f.matrix(i, i);
  }
  return static_cast<double>(p) * diag_sum / scalar_bound(f);
}

}  // namespace qmet
