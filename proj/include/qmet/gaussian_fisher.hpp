#pragma once

// Quantum Fisher information of zero-mean, circularly symmetric Gaussian
// states, symmetric logarithmic derivatives, and scalar Cramer-Rao bounds.
//
// Mode ordering for the 2n x 2n covariance is b = [b1, b1^dag, b2, b2^dag, ...].

#include <cstddef>
#include <optional>

#include "qmet/scene.hpp"
#include "qmet/types.hpp"

namespace qmet {

struct CovarianceMatrix {
  CMatrix sigma;  // Sigma_ab = 1/2 <b_a b_b + b_b b_a>
  MatrixStack dsigma;

  std::size_t modes() const { return static_cast<std::size_t>(sigma.rows() / 2); }
  std::size_t params() const { return dsigma.size(); }
};

enum class FisherKind { quantum, classical };

struct FisherMatrix {
  RMatrix matrix;
  FisherKind kind = FisherKind::quantum;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

struct SldMatrix {
  CMatrix m;  // L_i = b^dag M_i b + const
  std::size_t parameter_index = 0;
};

// Per mode pair (i, j): [[0, Gamma_ji + delta_ij/2], [Gamma_ij + delta_ij/2, 0]].
CMatrix covariance_block_form(const CMatrix& gamma, bool add_vacuum);
CovarianceMatrix covariance_from_coherence(const CoherenceMatrix& gamma);

// Omega = direct sum of i sigma_y = [[0, 1], [-1, 0]] per mode.
CMatrix symplectic_form(std::size_t modes);

// Solves with the moment operator Mfrak = Sigma (x) Sigma + 1/4 Omega (x) Omega,
// realised on column-major vectorised 2n x 2n matrices. One LU
// factorisation is shared by every parameter.
class GaussianFisher {
 public:
  explicit GaussianFisher(CovarianceMatrix cov);

  const CovarianceMatrix& covariance() const { return cov_; }
  const CMatrix& moment_operator() const { return moment_; }

  // Mfrak^{-1} vec(dSigma_i), reshaped to 2n x 2n.
  const CMatrix& sld_coefficients(std::size_t i) const { return coeffs_.at(i); }

  FisherMatrix qfi() const;
  SldMatrix sld(std::size_t i) const;

 private:
  CovarianceMatrix cov_;
  CMatrix moment_;
  std::vector<CMatrix> coeffs_;
};

FisherMatrix qfi_matrix(const CovarianceMatrix& cov);
SldMatrix sld_matrix(const CovarianceMatrix& cov, std::size_t i);

// Inverse of the M -> coefficient map: X(2j+1, 2k) = X(2k, 2j+1) = M(j, k),
// zero elsewhere.
CMatrix sld_coefficient_array(const SldMatrix& sld);

// Mfrak applied to a 2n x 2n matrix, i.e. Sigma X Sigma^T + 1/4 Omega X Omega^T.
CMatrix apply_moment_operator(const CMatrix& sigma, const CMatrix& x);

struct DetectionModes {
  CMatrix v;            // rows are detection modes; M = V^dag diag(eigenvalues) V
  RVector eigenvalues;  // descending
};

// Eigenvalues sorted descending. Degenerate eigenspaces are re-spanned by
// pivoted Gram-Schmidt on the standard basis and every row is phase-fixed so
// its largest-magnitude entry is real positive; the result is reproducible.
DetectionModes sld_detection_unitary(const SldMatrix& sld);
DetectionModes sld_detection_unitary(const CMatrix& hermitian);

// Tr(w F^{-1}); w defaults to the identity. Throws UnidentifiableError when
// the condition number of F exceeds max_condition.
double scalar_bound(const FisherMatrix& f, const std::optional<RMatrix>& w = std::nullopt,
                    double max_condition = 1e12);

double condition_number(const FisherMatrix& f);

// Tr([M_i, M_j] Gamma^T): the Gaussian-state expectation of the commutator of
// the two bilinear SLD operators.
Complex commutation_on_average(const SldMatrix& mi, const SldMatrix& mj, const CMatrix& gamma);
// |commutation_on_average| / (|M_i| |M_j| |Gamma|), Frobenius norms.
double relative_commutation(const SldMatrix& mi, const SldMatrix& mj, const CMatrix& gamma);

// R = p * sum_i (1 / F_ii) / Tr(F^{-1}), 0 < R <= p.
double gain_factor(const FisherMatrix& f);

}  // namespace qmet
