#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qmet/errors.hpp"
#include "qmet/inference.hpp"
#include "qmet/parallel.hpp"
#include "qmet/runners.hpp"
#include "qmet/scenario.hpp"

using namespace qmet;

namespace {

struct LineFixture {
  Scenario s;
  CoherenceMatrix inc;
  CMatrix u;
};

LineFixture line_with_optimal_u(const std::string& name, double mu, const RVector& temps) {
  LineFixture f;
  f.s = builtin_scenario(name);
  f.s.physics.mu = mu;
  f.s.temps = TemperatureMap(temps);
  f.inc = f.s.coherence();
  OptimizeOptions o;
  o.starts = 2;
  o.seed = 5;
  f.u = optimize_unitary(f.inc, o).result.u.matrix();
  return f;
}

}  // namespace

TEST(Sampling, DegenerateDistribution) {
  RVector p = RVector::Zero(4);
  p[0] = 1.0;
  const auto r = sample_outcomes(p, 12345, 1);
  EXPECT_EQ(r.counts[0], 12345u);
  EXPECT_EQ(r.counts[1] + r.counts[2] + r.counts[3], 0u);
  EXPECT_EQ(r.total, 12345u);
}

TEST(Sampling, UniformWithinFiveSigma) {
  const int m = 7;
  const std::uint64_t n = 1000000;
  const RVector p = RVector::Constant(m, 1.0 / m);
  const auto r = sample_outcomes(p, n, 42);
  const double sigma = std::sqrt(n * (1.0 / m) * (1.0 - 1.0 / m));
  std::uint64_t total = 0;
  for (auto c : r.counts) {
    EXPECT_NEAR(static_cast<double>(c), static_cast<double>(n) / m, 5.0 * sigma);
    total += c;
  }
  EXPECT_EQ(total, n);
}

TEST(Sampling, DeterministicPerSeed) {
  const RVector p = (RVector(4) << 0.1, 0.2, 0.3, 0.4).finished();
  EXPECT_EQ(sample_outcomes(p, 1000, 9).counts, sample_outcomes(p, 1000, 9).counts);
  EXPECT_NE(sample_outcomes(p, 100000, 9).counts, sample_outcomes(p, 100000, 10).counts);
}

TEST(Sampling, RejectsUnnormalised) {
  EXPECT_THROW(sample_outcomes(RVector::Constant(3, 0.5), 10, 1), ConfigError);
}

TEST(LogLikelihood, EmptyDataIsZero) {
  const auto s = builtin_scenario("line-3");
  const ImagingModel model(s.build(), s.physics, UnitaryPoint::identity(3));
  const auto ll = log_likelihood(RVector::Zero(5), model, s.temps.temps());
  EXPECT_EQ(ll.value, 0.0);
  EXPECT_EQ(ll.gradient.norm(), 0.0);
}

TEST(LogLikelihood, SingleModeVacuumCountsPreferZero) {
  MatrixStack stack = {CMatrix::Constant(1, 1, 1e-3)};
  const ImagingModel model(stack, UnitaryPoint::identity(1));
  const RVector counts = (RVector(3) << 1000.0, 0.0, 0.0).finished();
  double prev = 1.0;
  for (double t : {0.0, 10.0, 100.0, 1000.0}) {
    const auto ll = log_likelihood(counts, model, RVector::Constant(1, t));
    EXPECT_NEAR(ll.value, 1000.0 * std::log(1.0 / (1.0 + 1e-3 * t)), 1e-9);
    EXPECT_LT(ll.value, prev);
    prev = ll.value;
  }
  const auto fit = mle_estimate(counts, model);
  EXPECT_EQ(fit.theta_hat[0], 0.0);
}

TEST(LogLikelihood, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (const char* name : {"line-3", "line-5"}) {
    const auto s = builtin_scenario(name);
    const auto n = static_cast<std::size_t>(s.geometry.nx);
    const ImagingModel model(s.build(), s.physics, UnitaryPoint(haar_unitary(n, rng)));
    std::uniform_real_distribution<double> temp(200.0, 400.0), cnt(0.0, 1000.0);
    RVector theta(static_cast<Eigen::Index>(n));
    for (auto& t : theta) t = temp(rng);
    RVector counts(static_cast<Eigen::Index>(n + 2));
    for (auto& c : counts) c = std::round(cnt(rng));
    const auto ll = log_likelihood(counts, model, theta);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double h = 1e-3;
      RVector a = theta, b = theta;
      a[i] += h;
      b[i] -= h;
      const double fd = (log_likelihood(counts, model, a).value - log_likelihood(counts, model, b).value) / (2 * h);
      EXPECT_NEAR(fd, ll.gradient[i], 1e-5 * std::abs(ll.gradient[i]) + 1e-9);
    }
  }
}

TEST(LogLikelihood, InfeasiblePoint) {
  const ImagingModel model({CMatrix::Constant(1, 1, 1e-3)}, UnitaryPoint::identity(1));
  const RVector counts = (RVector(3) << 10.0, 1.0, 0.0).finished();
  EXPECT_THROW(log_likelihood(counts, model, RVector::Zero(1)), InfeasiblePointError);
  EXPECT_THROW(log_likelihood(RVector::Zero(4), model, RVector::Zero(1)), ConfigError);
}

TEST(Mle, SinglePixelClosedForm) {
  // P0 = 1 / (1 + c T) with outcome 0 against the rest: T = (N / N0 - 1) / c.
  // One mode has three outcomes; the closed form holds when the photon
  // outcomes are pooled, which is the sufficient statistic for N0.
  const double c = 2e-3;
  const ImagingModel model({CMatrix::Constant(1, 1, c)}, UnitaryPoint::identity(1));
  const double t_true = 317.0;
  const RVector p = model.distribution(RVector::Constant(1, t_true), false).probs;
  const RVector counts = 1e6 * p;
  const auto fit = mle_estimate(counts, model);
  EXPECT_NEAR(fit.theta_hat[0], (counts.sum() / counts[0] - 1.0) / c, 1e-8 * t_true);
  EXPECT_TRUE(fit.converged);
}

TEST(Mle, NoiselessExpectedCountsRecoverTruth) {
  RVector truth(5);
  truth << 280.0, 320.0, 300.0, 350.0, 260.0;
  const auto f = line_with_optimal_u("line-5", 0.05, truth);
  const ImagingModel model(f.inc.dgamma, UnitaryPoint(f.u));
  const RVector counts = 1e6 * model.distribution(truth, false).probs;
  const auto fit = mle_estimate(counts, model);
  EXPECT_LE(((fit.theta_hat - truth).array().abs() / truth.array()).maxCoeff(), 1e-6);
  EXPECT_NEAR(fit.log_likelihood, log_likelihood(counts, model, fit.theta_hat).value, 1e-9 * std::abs(fit.log_likelihood));
}

TEST(Mle, EstimatesStayInBox) {
  const auto s = builtin_scenario("line-3");
  const ImagingModel model(s.build(), s.physics, UnitaryPoint::identity(3));
  const RVector p = model.distribution(s.temps.temps(), false).probs;
  const auto rec = sample_outcomes(p, 1000, 4);
  MleOptions o;
  o.t_max = 5e3;
  const auto fit = mle_estimate(rec.as_real(), model, std::nullopt, o);
  EXPECT_GE(fit.theta_hat.minCoeff(), 0.0);
  EXPECT_LE(fit.theta_hat.maxCoeff(), 5e3);
}

TEST(Mle, ZeroTemperatureScene) {
  const auto s = builtin_scenario("line-3");
  const ImagingModel model(s.build(), s.physics, UnitaryPoint::identity(3));
  const RVector p = model.distribution(RVector::Zero(3), false).probs;
  const auto rec = sample_outcomes(p, 100000, 5);
  EXPECT_EQ(rec.counts[0], 100000u);
  const auto fit = mle_estimate(rec.as_real(), model);
  EXPECT_LE(fit.theta_hat.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mle, OutcomeReorderingInvariance) {
  // Relabelling detection modes permutes the single-photon outcomes; the
  // maximiser must not move.
  RVector truth(3);
  truth << 290.0, 310.0, 305.0;
  const auto s = builtin_scenario("line-3");
  std::mt19937_64 rng(6);
  const CMatrix u = haar_unitary(3, rng);
  CMatrix perm = CMatrix::Zero(3, 3);
  perm(0, 2) = perm(1, 0) = perm(2, 1) = 1.0;
  const ImagingModel a(s.build(), s.physics, UnitaryPoint(u));
  const ImagingModel b(s.build(), s.physics, UnitaryPoint(perm * u));
  const auto rec = sample_outcomes(a.distribution(truth, false).probs, 1000000, 7);
  const RVector ca = rec.as_real();
  RVector cb = ca;
  cb[1] = ca[3];
  cb[2] = ca[1];
  cb[3] = ca[2];
  const auto fa = mle_estimate(ca, a);
  const auto fb = mle_estimate(cb, b);
  EXPECT_LE((fa.theta_hat - fb.theta_hat).norm(), 1e-6 * fa.theta_hat.norm());
}

TEST(Mle, ErrorShrinksWithSampleSize) {
  RVector truth(3);
  truth << 290.0, 310.0, 300.0;
  const auto f = line_with_optimal_u("line-3", 0.05, truth);
  const ImagingModel model(f.inc.dgamma, UnitaryPoint(f.u));
  const RVector p = model.distribution(truth, false).probs;
  double prev = std::numeric_limits<double>::infinity();
  for (std::uint64_t n : {10000ull, 100000ull, 1000000ull}) {
    std::vector<double> err(50);
    parallel_for(err.size(), [&](std::size_t r) {
      const auto rec = sample_outcomes(p, n, derive_seed(77 + n, r));
      err[r] = (mle_estimate(rec.as_real(), model).theta_hat - truth).norm();
    });
    const double med = median(err);
    EXPECT_LT(med, prev) << "N=" << n;
    prev = med;
  }
}
