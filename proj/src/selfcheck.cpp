#include "qmet/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "qmet/errors.hpp"
#include "qmet/gaussian_fisher.hpp"
#include "qmet/kernels.hpp"
#include "qmet/photon_povm.hpp"
#include "qmet/scenario.hpp"
#include "qmet/unitary_opt.hpp"

namespace qmet {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

CheckResult kappa_check() {
  const double k = compute_kappa(0.21);
  return {"kappa(0.21 m) in [9.2, 9.6]", k >= 9.2 && k <= 9.6, "kappa = " + fmt(k)};
}

CheckResult photon_budget_check() {
  Scenario s = builtin_scenario("image-6x5");
  s.temps = TemperatureMap::uniform(30, 293.0);
  const double tr = s.coherence().gamma.trace().real();
  return {"30-pixel Tr Gamma = 0.39 +- 0.02", std::abs(tr - 0.39) <= 0.02, "Tr Gamma = " + fmt(tr)};
}

CheckResult single_mode_qfi_check() {
  double worst = 0.0;
  for (double nbar : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
    CoherenceMatrix g;
    g.gamma = CMatrix::Constant(1, 1, nbar);
    g.dgamma = {CMatrix::Constant(1, 1, 1.0)};
    const double f = qfi_matrix(covariance_from_coherence(g)).matrix(0, 0);
    const double expect = 1.0 / (nbar * (nbar + 1.0));
    worst = std::max(worst, std::abs(f - expect) / expect);
  }
  return {"single-mode thermal QFI", worst <= 1e-8, "max rel err " + fmt(worst)};
}

CoherenceMatrix random_coherence(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const auto k = static_cast<Eigen::Index>(n);
  CoherenceMatrix g;
  g.gamma = CMatrix::Zero(k, k);
  for (std::size_t i = 0; i < p; ++i) {
    CMatrix a(k, k);
    for (Eigen::Index c = 0; c < k; ++c)
      for (Eigen::Index r = 0; r < k; ++r) a(r, c) = Complex(normal(rng), normal(rng));
    const CMatrix d = 0.05 * a * a.adjoint() / static_cast<double>(n);
    g.dgamma.push_back(d);
    g.gamma += d;
  }
  return g;
}

CheckResult probability_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst_sum = 0.0;
  double worst_fd = 0.0;
  bool ordered = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
    const CoherenceMatrix g = random_coherence(n, n, rng);
    const auto u = UnitaryPoint(haar_unitary(n, rng));
    const CoherenceMatrix gt = detection_coherence(g, u);
    const auto dist = probability_derivatives(gt);
    worst_sum = std::max(worst_sum, std::abs(dist.probs.sum() - 1.0));
    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i) {
      const CMatrix dg = gt.dgamma[i];
      const RVector fd = (outcome_probabilities(gt.gamma + h * dg).probs -
                          outcome_probabilities(gt.gamma - h * dg).probs) /
                         (2.0 * h);
      const RVector an = dist.dprobs.col(static_cast<Eigen::Index>(i));
      worst_fd = std::max(worst_fd, (fd - an).norm() / std::max(an.norm(), 1e-300));
    }
    try {
      const double c = scalar_bound(cfi_matrix(dist));
      const double q = scalar_bound(qfi_matrix(covariance_from_coherence(g)));
      if (c < q * (1.0 - 1e-9)) ordered = false;
    } catch (const NumericalError&) {
    }
  }
  return {"POVM normalisation, FD derivatives, CCRB >= QCRB",
          worst_sum <= 1e-12 && worst_fd <= 1e-5 && ordered,
          "sum err " + fmt(worst_sum) + ", FD rel err " + fmt(worst_fd) + (ordered ? "" : ", ordering violated")};
}

CheckResult procrustes_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const CMatrix v = haar_unitary(4, rng);
  CostFunction f;
  f.dimension = 4;
  f.evaluate = [v](const CMatrix& u) { return (u - v).squaredNorm(); };
  f.gradient = [v](const CMatrix& u) -> CMatrix { return u - v; };
  CgOptions o;
  o.max_iters = 500;
  o.seed = seed + 1;
  const CgResult r = minimize(f, o);
  const double drift = unitarity_defect(r.u.matrix());
  return {"Procrustes on U(4)", r.cost <= 1e-8 && drift <= 1e-9,
          "cost " + fmt(r.cost) + " after " + std::to_string(r.iterations) + " iterations, drift " + fmt(drift)};
}

CheckResult kernel_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const std::size_t m = 37, p = 5;
  std::vector<double> rows(m * p), w(m);
  for (auto& x : rows) x = normal(rng);
  for (auto& x : w) x = std::abs(normal(rng));
  std::vector<double> ref(p * p), out(p * p);
  kernels::table(kernels::Isa::scalar).weighted_gram(rows.data(), w.data(), m, p, ref.data());
  kernels::active().weighted_gram(rows.data(), w.data(), m, p, out.data());
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(ref[i] - out[i]));
  return {"SIMD kernel matches scalar reference", err <= 1e-12,
          "active " + std::string(kernels::name(kernels::active().isa)) + ", max diff " + fmt(err)};
}

}  // namespace

std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
  std::vector<std::function<CheckResult()>> checks = {
      kappa_check,
      photon_budget_check,
      single_mode_qfi_check,
      [seed] { return probability_check(seed); },
      [seed] { return procrustes_check(seed); },
      [seed] { return kernel_check(seed); },
  };
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"check threw", false, e.what()});
    }
  }
  return out;
}

}  // namespace qmet
