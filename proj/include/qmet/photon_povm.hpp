#pragma once

// Single-photon POVM in the detection modes d = U b: outcome 0 is vacuum,
// outcome k in 1..n is exactly one photon in mode k, outcome n+1 collects
// everything else.
//
//   P_0 = 1 / det(G + I),  P_k = [G (G + I)^{-1}]_kk P_0,  P_{n+1} = 1 - sum,
//
// with G the detection-mode coherence matrix conj(U) Gamma U^T.

#include <cstddef>
#include <optional>

#include "qmet/gaussian_fisher.hpp"
#include "qmet/scene.hpp"
#include "qmet/types.hpp"
#include "qmet/unitary.hpp"
#include "qmet/unitary_opt.hpp"

namespace qmet {

struct OutcomeDistribution {
  RVector probs;   // n + 2 entries: P_0, P_1..P_n, P_{n+1}
  RMatrix dprobs;  // (n + 2) x p, dP_l / dT_i; empty if not requested

  std::size_t outcomes() const { return static_cast<std::size_t>(probs.size()); }
};

// conj(U) Gamma U^T and the same congruence on the derivative stack.
CoherenceMatrix detection_coherence(const CoherenceMatrix& gamma, const UnitaryPoint& u);
// Same without the unitarity check; used for finite-difference probes.
CoherenceMatrix transform_coherence(const CoherenceMatrix& gamma, const CMatrix& u);

OutcomeDistribution outcome_probabilities(const CMatrix& gamma_t);
OutcomeDistribution probability_derivatives(const CoherenceMatrix& gamma_t);

struct CfiOptions {
  double zero_probability = 1e-14;
  // Zero-probability outcomes are skipped when their derivatives are below
  // sqrt(zero_probability) * scale; otherwise DegenerateSupportError.
  bool throw_on_degenerate = true;
};

FisherMatrix cfi_matrix(const OutcomeDistribution& dist, const CfiOptions& opts = {});

double scalar_ccrb(const CoherenceMatrix& incoming, const UnitaryPoint& u,
                   const std::optional<RMatrix>& w = std::nullopt);
double scalar_ccrb(const Geometry& geom, const PhysicsConstants& phys, const TemperatureMap& temps,
                   const UnitaryPoint& u, const std::optional<RMatrix>& w = std::nullopt);

// Tr(w CFI(U)^{-1}) as a function of the detection unitary, with its analytic
// Wirtinger gradient. Unidentifiable points evaluate to +infinity.
class CcrbCost {
 public:
  explicit CcrbCost(CoherenceMatrix incoming, std::optional<RMatrix> w = std::nullopt);

  double value(const CMatrix& u) const;
  // Throws UnidentifiableError at singular points.
  double value_checked(const CMatrix& u) const;
  CMatrix gradient(const CMatrix& u) const;

  CostFunction as_cost_function() const;
  const CoherenceMatrix& incoming() const { return incoming_; }

 private:
  CoherenceMatrix incoming_;
  RMatrix weight_;
};

}  // namespace qmet
