#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qmet/errors.hpp"
#include "qmet/gaussian_fisher.hpp"
#include "qmet/scenario.hpp"
#include "qmet/unitary.hpp"

using namespace qmet;

namespace {

CMatrix random_psd(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CMatrix a(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) a(r, c) = Complex(normal(rng), normal(rng));
  return scale * a * a.adjoint() / static_cast<double>(n);
}

CoherenceMatrix random_coherence(Eigen::Index n, std::size_t p, std::mt19937_64& rng) {
  CoherenceMatrix g;
  g.gamma = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < p; ++i) {
    g.dgamma.push_back(random_psd(n, 0.3, rng));
    g.gamma += g.dgamma.back();
  }
  return g;
}

CoherenceMatrix single_mode(double nbar) {
  CoherenceMatrix g;
  g.gamma = CMatrix::Constant(1, 1, nbar);
  g.dgamma = {CMatrix::Constant(1, 1, 1.0)};
  return g;
}

// Real quadrature covariance V = 1/2 <{R, R}> with R = (x_1..x_n, p_1..p_n),
// b = (x + i p) / sqrt 2: V = I/2 + [[Re G, Im G], [-Im G, Re G]].
RMatrix quadrature_covariance(const CMatrix& g, bool vacuum) {
  const Eigen::Index n = g.rows();
  RMatrix v(2 * n, 2 * n);
  v << g.real(), g.imag(), -g.imag(), g.real();
  if (vacuum) v += 0.5 * RMatrix::Identity(2 * n, 2 * n);
  return v;
}

// F_ij = 1/2 vec(dV_i)^T (V (x) V - 1/4 J (x) J)^{-1} vec(dV_j), J = [[0, I], [-I, 0]].
RMatrix quadrature_qfi(const CoherenceMatrix& g) {
  const Eigen::Index n = g.gamma.rows();
  const Eigen::Index m = 2 * n;
  const RMatrix v = quadrature_covariance(g.gamma, true);
  RMatrix j = RMatrix::Zero(m, m);
  j.topRightCorner(n, n) = RMatrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = -RMatrix::Identity(n, n);
  RMatrix big(m * m, m * m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      big.block(a * m, b * m, m, m) = v(a, b) * v - 0.25 * j(a, b) * j;
  const Eigen::PartialPivLU<RMatrix> lu(big);
  const auto p = static_cast<Eigen::Index>(g.params());
  RMatrix f(p, p);
  std::vector<RVector> vecs;
  for (const auto& d : g.dgamma) {
    const RMatrix dv = quadrature_covariance(d, false);
    vecs.push_back(Eigen::Map<const RVector>(dv.data(), m * m));
  }
  for (Eigen::Index a = 0; a < p; ++a) {
    const RVector x = lu.solve(vecs[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < p; ++b) f(a, b) = 0.5 * vecs[static_cast<std::size_t>(b)].dot(x);
  }
  return f;
}

// 1/2 <a b + b a> for a, b in {b_k, b_k^dag} from <b_k^dag b_l> = G_kl and
// <b_k b_l^dag> = delta_kl + G_lk.
Complex symmetric_moment(const CMatrix& g, Eigen::Index a, Eigen::Index b) {
  const Eigen::Index i = a / 2, j = b / 2;
  const bool a_dag = a % 2 == 1, b_dag = b % 2 == 1;
  if (a_dag == b_dag) return 0.0;
  const double d = i == j ? 1.0 : 0.0;
  if (!a_dag) return 0.5 * ((d + g(j, i)) + g(j, i));  // b_i b_j^dag and b_j^dag b_i
  return 0.5 * (g(i, j) + (d + g(i, j)));
}

}  // namespace

TEST(Covariance, SingleModeBlock) {
  const auto cov = covariance_from_coherence(single_mode(0.7));
  EXPECT_EQ(cov.sigma(0, 0), Complex(0.0));
  EXPECT_EQ(cov.sigma(1, 1), Complex(0.0));
  EXPECT_NEAR(cov.sigma(0, 1).real(), 1.2, 1e-15);
  EXPECT_NEAR(cov.sigma(1, 0).real(), 1.2, 1e-15);
}

TEST(Covariance, VacuumBlocks) {
  CoherenceMatrix g;
  g.gamma = CMatrix::Zero(3, 3);
  const CMatrix s = covariance_block_form(g.gamma, true);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double d = i == j ? 0.5 : 0.0;
      EXPECT_EQ(s(2 * i, 2 * j), Complex(0.0));
      EXPECT_EQ(s(2 * i + 1, 2 * j + 1), Complex(0.0));
      EXPECT_EQ(s(2 * i, 2 * j + 1), Complex(d));
      EXPECT_EQ(s(2 * i + 1, 2 * j), Complex(d));
    }
}

TEST(Covariance, MatchesMomentEvaluation) {
  std::mt19937_64 rng(3);
  const CMatrix g = random_psd(3, 1.0, rng);
  const CMatrix s = covariance_block_form(g, true);
  for (Eigen::Index a = 0; a < 6; ++a)
    for (Eigen::Index b = 0; b < 6; ++b) {
      EXPECT_NEAR(std::abs(s(a, b) - symmetric_moment(g, a, b)), 0.0, 1e-14) << a << "," << b;
      EXPECT_NEAR(std::abs(s(a, b) - s(b, a)), 0.0, 1e-14);
    }
}

TEST(Qfi, SingleModeThermal) {
  for (double nbar : {1e-3, 3e-3, 1e-2, 0.1, 0.5, 1.0, 3.0, 10.0}) {
    const double f = qfi_matrix(covariance_from_coherence(single_mode(nbar))).matrix(0, 0);
    const double expect = 1.0 / (nbar * (nbar + 1.0));
    EXPECT_NEAR(f, expect, 1e-8 * expect) << nbar;
  }
}

TEST(Qfi, DecoupledModesAreBlockDiagonal) {
  CoherenceMatrix g;
  g.gamma = CMatrix::Zero(2, 2);
  g.gamma(0, 0) = 0.2;
  g.gamma(1, 1) = 1.5;
  CMatrix d0 = CMatrix::Zero(2, 2), d1 = CMatrix::Zero(2, 2);
  d0(0, 0) = 1.0;
  d1(1, 1) = 1.0;
  g.dgamma = {d0, d1};
  const RMatrix f = qfi_matrix(covariance_from_coherence(g)).matrix;
  EXPECT_NEAR(f(0, 0), 1.0 / (0.2 * 1.2), 1e-10);
  EXPECT_NEAR(f(1, 1), 1.0 / (1.5 * 2.5), 1e-10);
  EXPECT_NEAR(f(0, 1), 0.0, 1e-12);
}

TEST(Qfi, MatchesRealQuadratureFormula) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = random_coherence(3, 3, rng);
    const RMatrix ours = qfi_matrix(covariance_from_coherence(g)).matrix;
    const RMatrix oracle = quadrature_qfi(g);
    EXPECT_LE((ours - oracle).norm(), 1e-9 * oracle.norm());
  }
}

TEST(Qfi, SymmetricPositiveDefinite) {
  std::mt19937_64 rng(6);
  const auto g = random_coherence(4, 3, rng);
  const RMatrix f = qfi_matrix(covariance_from_coherence(g)).matrix;
  EXPECT_LE((f - f.transpose()).norm(), 1e-10 * f.norm());
  const Eigen::SelfAdjointEigenSolver<RMatrix> es(f);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * f.norm());
}

TEST(Qfi, InvariantUnderModeUnitaries) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const auto g = random_coherence(3, 2, rng);
    const CMatrix u = haar_unitary(3, rng);
    CoherenceMatrix h;
    h.gamma = u.conjugate() * g.gamma * u.transpose();
    for (const auto& d : g.dgamma) h.dgamma.push_back(u.conjugate() * d * u.transpose());
    const RMatrix a = qfi_matrix(covariance_from_coherence(g)).matrix;
    const RMatrix b = qfi_matrix(covariance_from_coherence(h)).matrix;
    EXPECT_LE((a - b).norm(), 1e-9 * a.norm());
  }
}

TEST(Qfi, VacuumIsSingular) {
  CoherenceMatrix g;
  g.gamma = CMatrix::Zero(2, 2);
  g.dgamma = {CMatrix::Identity(2, 2)};
  try {
    qfi_matrix(covariance_from_coherence(g));
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_NEAR(e.eigenvalue(), 0.0, 1e-14);
  }
}

TEST(Qfi, ScalarBoundNonIncreasingInMu) {
  Scenario s = builtin_scenario("line-3");
  double prev = std::numeric_limits<double>::infinity();
  for (double mu : {0.01, 0.05, 0.1, 0.3, 0.5, 1.0}) {
    s.physics.mu = mu;
    const double q = scalar_bound(qfi_matrix(covariance_from_coherence(s.coherence())));
    EXPECT_LE(q, prev);
    prev = q;
  }
}

TEST(Sld, RoundTripThroughMomentOperator) {
  std::mt19937_64 rng(8);
  const auto g = random_coherence(3, 3, rng);
  const auto cov = covariance_from_coherence(g);
  const GaussianFisher gf(cov);
  for (std::size_t i = 0; i < 3; ++i) {
    const SldMatrix m = gf.sld(i);
    EXPECT_LE((m.m - m.m.adjoint()).norm(), 1e-12 * m.m.norm());
    const CMatrix back = apply_moment_operator(cov.sigma, sld_coefficient_array(m));
    EXPECT_LE((back - cov.dsigma[i]).norm(), 1e-9 * cov.dsigma[i].norm());
  }
}

TEST(Sld, SingleModeCoefficient) {
  // M = dn / (n (n + 1)) reproduces the QFI through F = M^2 n (n + 1).
  const double nbar = 0.4;
  const auto m = sld_matrix(covariance_from_coherence(single_mode(nbar)), 0);
  EXPECT_NEAR(m.m(0, 0).real(), 1.0 / (nbar * (nbar + 1.0)), 1e-10);
}

TEST(Sld, FisherFromSldCovariance) {
  // For L_i = b^dag M_i b, F_ij = Re Tr(M_i (I + G^T) M_j G^T).
  std::mt19937_64 rng(9);
  const auto g = random_coherence(3, 3, rng);
  const auto cov = covariance_from_coherence(g);
  const GaussianFisher gf(cov);
  const RMatrix f = gf.qfi().matrix;
  const CMatrix gt = g.gamma.transpose();
  const CMatrix id = CMatrix::Identity(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double v = (gf.sld(i).m * (id + gt) * gf.sld(j).m * gt).trace().real();
      EXPECT_NEAR(v, f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1e-9 * f.norm());
    }
}

TEST(Sld, ZeroDerivativeGivesZero) {
  CoherenceMatrix g;
  g.gamma = 0.5 * CMatrix::Identity(2, 2);
  g.dgamma = {CMatrix::Zero(2, 2)};
  EXPECT_LE(sld_matrix(covariance_from_coherence(g), 0).m.norm(), 1e-15);
}

TEST(Sld, TwoPixelEqualDiagonalForm) {
  const auto inc = builtin_scenario("two-pixel").coherence();
  const GaussianFisher gf(covariance_from_coherence(inc));
  for (std::size_t i = 0; i < 2; ++i) {
    const CMatrix m = gf.sld(i).m;
    EXPECT_NEAR(m(0, 0).real(), m(1, 1).real(), 1e-9 * m.norm());
    EXPECT_NEAR(std::abs(m(0, 1) - std::conj(m(1, 0))), 0.0, 1e-9 * m.norm());
  }
}

TEST(DetectionUnitary, DiagonalisesRandomHermitian) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    CMatrix a = random_psd(4, 1.0, rng) - random_psd(4, 1.0, rng);
    a = (0.5 * (a + a.adjoint())).eval();
    const auto d = sld_detection_unitary(a);
    EXPECT_LE(unitarity_defect(d.v), 1e-12);
    const CMatrix diag = d.v * a * d.v.adjoint();
    EXPECT_LE((diag - CMatrix(diag.diagonal().asDiagonal())).norm(), 1e-10);
    for (Eigen::Index k = 1; k < 4; ++k) EXPECT_GE(d.eigenvalues[k - 1], d.eigenvalues[k]);
    const CMatrix back = d.v.adjoint() * d.eigenvalues.cast<Complex>().asDiagonal() * d.v;
    EXPECT_LE((back - a).norm(), 1e-10);
  }
}

TEST(DetectionUnitary, TwoModeEqualDiagonalGivesPhiFamily) {
  const double phi = 0.83;
  CMatrix m(2, 2);
  m << 1.0, 0.4 * std::polar(1.0, phi), 0.4 * std::polar(1.0, -phi), 1.0;
  const auto d = sld_detection_unitary(m);
  const CMatrix expect = two_mode_unitary(phi);
  // Equal up to row phases.
  for (Eigen::Index r = 0; r < 2; ++r) {
    const Complex overlap = d.v.row(r).dot(expect.row(r));
    EXPECT_NEAR(std::abs(overlap), 1.0, 1e-12);
  }
}

TEST(DetectionUnitary, DiagonalInputAndDeterministicDegeneracy) {
  RVector diag(3);
  diag << 1.0, 3.0, 2.0;
  const auto d = sld_detection_unitary(CMatrix(diag.cast<Complex>().asDiagonal()));
  EXPECT_NEAR(d.eigenvalues[0], 3.0, 1e-14);
  EXPECT_NEAR(std::abs(d.v(0, 1)), 1.0, 1e-14);

  const auto e = sld_detection_unitary(CMatrix::Identity(3, 3));
  EXPECT_LE((e.v - CMatrix::Identity(3, 3)).norm(), 1e-12);
  const auto e2 = sld_detection_unitary(CMatrix::Identity(3, 3));
  EXPECT_EQ(e.v, e2.v);
}

TEST(ScalarBound, Examples) {
  FisherMatrix f{RMatrix::Zero(2, 2), FisherKind::quantum};
  f.matrix.diagonal() << 4.0, 1.0;
  EXPECT_NEAR(scalar_bound(f), 1.25, 1e-15);
  FisherMatrix c{2.5 * RMatrix::Identity(3, 3), FisherKind::quantum};
  EXPECT_NEAR(scalar_bound(c), 3.0 / 2.5, 1e-15);
  RMatrix w = RMatrix::Zero(2, 2);
  w(0, 0) = 1.0;
  EXPECT_NEAR(scalar_bound(f, w), 0.25, 1e-15);
}

TEST(ScalarBound, SingularNamesNullVector) {
  FisherMatrix f{RMatrix::Ones(2, 2), FisherKind::classical};
  try {
    scalar_bound(f);
    FAIL() << "expected UnidentifiableError";
  } catch (const UnidentifiableError& e) {
    const RVector v = e.null_vector();
    EXPECT_NEAR(std::abs(v[0] + v[1]), 0.0, 1e-12);
  }
}

TEST(Commutation, SelfCommutationIsZero) {
  std::mt19937_64 rng(12);
  const auto g = random_coherence(3, 1, rng);
  const SldMatrix m{random_psd(3, 1.0, rng), 0};
  EXPECT_EQ(commutation_on_average(m, m, g.gamma), Complex(0.0));
}

TEST(Commutation, MatchesFourthMomentWick) {
  std::mt19937_64 rng(13);
  const CMatrix g = random_psd(2, 0.8, rng);
  const CMatrix a = random_psd(2, 1.0, rng) - random_psd(2, 1.0, rng);
  const CMatrix b = random_psd(2, 1.0, rng) - random_psd(2, 1.0, rng);
  auto four = [&](int k, int l, int m, int n) {
    const double d = l == m ? 1.0 : 0.0;
    return g(k, l) * g(m, n) + g(k, n) * (d + g(m, l));
  };
  Complex ab = 0.0, ba = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
          ab += a(k, l) * b(m, n) * four(k, l, m, n);
          ba += b(k, l) * a(m, n) * four(k, l, m, n);
        }
  const Complex ours = commutation_on_average({a, 0}, {b, 1}, g);
  EXPECT_GT(std::abs(ours), 1e-6);
  EXPECT_NEAR(std::abs(ours - (ab - ba)), 0.0, 1e-12);
}

TEST(Commutation, TwoPixelEqualTemperaturesCommute) {
  const auto inc = builtin_scenario("two-pixel").coherence();
  const GaussianFisher gf(covariance_from_coherence(inc));
  EXPECT_LE(relative_commutation(gf.sld(0), gf.sld(1), inc.gamma), 1e-10);
}

TEST(Gain, Examples) {
  FisherMatrix d{RMatrix::Zero(3, 3), FisherKind::quantum};
  d.matrix.diagonal() << 1.0, 2.0, 5.0;
  EXPECT_NEAR(gain_factor(d), 3.0, 1e-14);

  // [[1, r], [r, 1]]: Tr F^{-1} = 2 / (1 - r^2), so R = 2 (1 - r^2) < 1 for r > 0.71.
  const double r = 0.9;
  FisherMatrix c{RMatrix::Ones(2, 2), FisherKind::quantum};
  c.matrix(0, 1) = c.matrix(1, 0) = r;
  EXPECT_NEAR(gain_factor(c), 2.0 * (1.0 - r * r), 1e-14);
  EXPECT_LT(gain_factor(c), 1.0);
}

TEST(Gain, BoundedByParameterCount) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_coherence(3, 3, rng);
    const double gain = gain_factor(qfi_matrix(covariance_from_coherence(g)));
    EXPECT_GT(gain, 0.0);
    EXPECT_LE(gain, 3.0 + 1e-12);
  }
}
