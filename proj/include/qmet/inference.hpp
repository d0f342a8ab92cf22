#pragma once

// Monte-Carlo photon counting and maximum-likelihood temperature
// reconstruction for the single-photon POVM.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmet/photon_povm.hpp"
#include "qmet/scene.hpp"
#include "qmet/types.hpp"
#include "qmet/unitary.hpp"

namespace qmet {

struct MeasurementRecord {
  std::vector<std::uint64_t> counts;  // N_0 .. N_{n+1}
  std::uint64_t total = 0;
  std::uint64_t seed = 0;

  RVector as_real() const;
};

// Multinomial draw as a chain of conditional binomials; reproducible per seed.
MeasurementRecord sample_outcomes(const RVector& probs, std::uint64_t n, std::uint64_t seed);

// Detection-mode coherence as a linear function of the temperatures:
// G(theta) = sum_i theta_i conj(U) dGamma_i U^T.
class ImagingModel {
 public:
  ImagingModel(const MatrixStack& dgamma, const UnitaryPoint& u);
  ImagingModel(const Geometry& geom, const PhysicsConstants& phys, const UnitaryPoint& u);

  std::size_t params() const { return stack_.size(); }
  std::size_t modes() const { return stack_.empty() ? 0 : static_cast<std::size_t>(stack_[0].rows()); }
  std::size_t outcomes() const { return modes() + 2; }
  const MatrixStack& detection_stack() const { return stack_; }

  CoherenceMatrix coherence(const RVector& theta) const;
  OutcomeDistribution distribution(const RVector& theta, bool derivatives = true) const;

 private:
  MatrixStack stack_;
};

struct LogLikelihood {
  double value = 0.0;
  RVector gradient;
};

// sum_k N_k log P_k(theta). Counts may be real (expected counts). Throws
// InfeasiblePointError if some P_k = 0 with N_k > 0.
LogLikelihood log_likelihood(const RVector& counts, const ImagingModel& model, const RVector& theta);

struct MleOptions {
  double t_max = 1e4;
  int starts = 4;
  int max_iters = 300;
  double relative_tolerance = 1e-12;  // on the log-likelihood change
  double decrement_tolerance = 1e-12; // on g^T (N F)^{-1} g over the free coordinates
  double perturbation = 0.2;          // relative spread of the seeded starts
  std::uint64_t seed = 7;
};

struct MleResult {
  RVector theta_hat;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  int start_index = 0;
  double decrement = 0.0;
  std::string diagnostics;
};

// Start for a uniform scene: P_0 ~ exp(-Tr G), so T ~ -log(N_0 / N) / sum_i Tr dG_i.
double uniform_start(const RVector& counts, const ImagingModel& model);

// Projected Fisher scoring with backtracking on the box [0, t_max]^p, from
// theta0 (or the uniform start) plus seeded perturbations; returns the best.
MleResult mle_estimate(const RVector& counts, const ImagingModel& model,
                       const std::optional<RVector>& theta0 = std::nullopt, const MleOptions& opts = {});

}  // namespace qmet
