#include "qmet/photon_povm.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "qmet/errors.hpp"
#include "qmet/kernels.hpp"

namespace qmet {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Intermediate quantities shared by the probabilities, their derivatives and
// the reverse-mode gradient of the scalar bound.
struct PovmState {
  double p0 = 0.0;
  CMatrix a;         // (G + I)^{-1}
  RVector kdiag;     // diag(G (G + I)^{-1}) = 1 - diag(A)
  RVector t;         // t_i = Tr(A dG_i)
  RMatrix s;         // s(k, i) = [A dG_i A]_kk
  OutcomeDistribution dist;
};

PovmState evaluate_povm(const CMatrix& gt, const MatrixStack* dgt) {
  const Eigen::Index n = gt.rows();
  if (gt.cols() != n) throw ConfigError("coherence matrix must be square");

  PovmState st;
  const CMatrix shifted = 0.5 * (gt + gt.adjoint()) + CMatrix::Identity(n, n);
  const Eigen::LLT<CMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("det(Gamma + I) is not positive: coherence matrix is not PSD");
  }
  double logdet = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) logdet += 2.0 * std::log(llt.matrixL()(k, k).real());
  st.p0 = std::exp(-logdet);
  if (!(st.p0 > 0.0) || !std::isfinite(st.p0)) {
    throw NumericalError("vacuum probability underflowed (log det = " + std::to_string(logdet) + ")");
  }

  st.a = llt.solve(CMatrix::Identity(n, n));
  st.a = (0.5 * (st.a + st.a.adjoint())).eval();
  st.kdiag = RVector::Ones(n) - st.a.diagonal().real();

  auto& probs = st.dist.probs;
  probs.resize(n + 2);
  probs[0] = st.p0;
  double total = st.p0;
  for (Eigen::Index k = 0; k < n; ++k) {
    probs[k + 1] = st.p0 * std::max(0.0, st.kdiag[k]);
    total += probs[k + 1];
  }
  probs[n + 1] = std::max(0.0, 1.0 - total);

  if (dgt == nullptr) return st;

  const auto p = dgt->size();
  st.t.resize(idx(p));
  st.s.resize(n, idx(p));
  auto& dp = st.dist.dprobs;
  dp.resize(n + 2, idx(p));
  for (std::size_t i = 0; i < p; ++i) {
    const CMatrix& d = (*dgt)[i];
    const auto col = idx(i);
    // Tr(A D) = Re sum_ab conj(A_ab) D_ab for Hermitian A, D.
    st.t[col] = kernels::real_inner(st.a.data(), d.data(), static_cast<std::size_t>(d.size()));
    const CMatrix e = d * st.a;
    for (Eigen::Index k = 0; k < n; ++k) {
      // [A D A]_kk = sum_b conj(A_bk) (D A)_bk
      st.s(k, col) = kernels::real_inner(st.a.col(k).data(), e.col(k).data(), static_cast<std::size_t>(n));
    }
    dp(0, col) = -st.p0 * st.t[col];
    double sum = dp(0, col);
    for (Eigen::Index k = 0; k < n; ++k) {
      dp(k + 1, col) = st.p0 * (st.s(k, col) - st.kdiag[k] * st.t[col]);
      sum += dp(k + 1, col);
    }
    dp(n + 1, col) = -sum;
  }
  return st;
}

struct CfiParts {
  FisherMatrix fisher;
  std::vector<bool> included;
};

CfiParts cfi_parts(const OutcomeDistribution& dist, const CfiOptions& opts) {
  const auto m = dist.outcomes();
  const auto p = static_cast<std::size_t>(dist.dprobs.cols());
  if (static_cast<std::size_t>(dist.dprobs.rows()) != m) {
    throw ConfigError("outcome distribution has no derivative table");
  }
  const double scale = std::max(dist.dprobs.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double dguard = std::sqrt(opts.zero_probability) * scale;

  CfiParts out;
  out.included.assign(m, false);
  std::vector<double> rows;
  std::vector<double> weights;
  rows.reserve(m * p);
  for (std::size_t l = 0; l < m; ++l) {
    const double pl = dist.probs[idx(l)];
    if (pl < opts.zero_probability) {
      if (dist.dprobs.row(idx(l)).cwiseAbs().maxCoeff() >= dguard && opts.throw_on_degenerate) {
        throw DegenerateSupportError("outcome " + std::to_string(l) +
                                         " has vanishing probability but non-vanishing derivative",
                                     l);
      }
      continue;
    }
    out.included[l] = true;
    weights.push_back(1.0 / pl);
    for (std::size_t i = 0; i < p; ++i) rows.push_back(dist.dprobs(idx(l), idx(i)));
  }

  RMatrix f(idx(p), idx(p));
  // Row-major p x p output; the result is symmetric so storage order is moot.
  std::vector<double> buf(p * p);
  kernels::active().weighted_gram(rows.data(), weights.data(), weights.size(), p, buf.data());
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) f(idx(i), idx(j)) = 0.5 * (buf[i * p + j] + buf[j * p + i]);
  out.fisher = {f, FisherKind::classical};
  return out;
}

CMatrix congruence(const CMatrix& u, const CMatrix& x) { return u.conjugate() * x * u.transpose(); }

}  // namespace

CoherenceMatrix transform_coherence(const CoherenceMatrix& gamma, const CMatrix& u) {
  if (u.rows() != gamma.gamma.rows() || u.cols() != gamma.gamma.cols()) {
    throw ConfigError("unitary dimension " + std::to_string(u.rows()) + " does not match " +
                      std::to_string(gamma.gamma.rows()) + " modes");
  }
  CoherenceMatrix out;
  out.gamma = congruence(u, gamma.gamma);
  out.dgamma.reserve(gamma.dgamma.size());
  for (const auto& d : gamma.dgamma) out.dgamma.push_back(congruence(u, d));
  return out;
}

CoherenceMatrix detection_coherence(const CoherenceMatrix& gamma, const UnitaryPoint& u) {
  return transform_coherence(gamma, u.matrix());
}

OutcomeDistribution outcome_probabilities(const CMatrix& gamma_t) {
  return evaluate_povm(gamma_t, nullptr).dist;
}

OutcomeDistribution probability_derivatives(const CoherenceMatrix& gamma_t) {
  return evaluate_povm(gamma_t.gamma, &gamma_t.dgamma).dist;
}

FisherMatrix cfi_matrix(const OutcomeDistribution& dist, const CfiOptions& opts) {
  return cfi_parts(dist, opts).fisher;
}

double scalar_ccrb(const CoherenceMatrix& incoming, const UnitaryPoint& u, const std::optional<RMatrix>& w) {
  const auto dist = probability_derivatives(detection_coherence(incoming, u));
  return scalar_bound(cfi_matrix(dist), w);
}

double scalar_ccrb(const Geometry& geom, const PhysicsConstants& phys, const TemperatureMap& temps,
                   const UnitaryPoint& u, const std::optional<RMatrix>& w) {
  return scalar_ccrb(coherence_matrix(geom, phys, temps), u, w);
}

CcrbCost::CcrbCost(CoherenceMatrix incoming, std::optional<RMatrix> w) : incoming_(std::move(incoming)) {
  const auto p = idx(incoming_.params());
  weight_ = w ? *w : RMatrix::Identity(p, p);
  if (weight_.rows() != p || weight_.cols() != p) throw ConfigError("weight matrix has wrong size");
  weight_ = (0.5 * (weight_ + weight_.transpose())).eval();
}

double CcrbCost::value_checked(const CMatrix& u) const {
  const auto gt = transform_coherence(incoming_, u);
  const auto st = evaluate_povm(gt.gamma, &gt.dgamma);
  return scalar_bound(cfi_matrix(st.dist), weight_);
}

double CcrbCost::value(const CMatrix& u) const {
  try {
    return value_checked(u);
  } catch (const UnidentifiableError&) {
    return std::numeric_limits<double>::infinity();
  } catch (const DegenerateSupportError&) {
    return std::numeric_limits<double>::infinity();
  }
}

CMatrix CcrbCost::gradient(const CMatrix& u) const {
  const Eigen::Index n = u.rows();
  const auto p = incoming_.params();
  const auto gt = transform_coherence(incoming_, u);
  const auto st = evaluate_povm(gt.gamma, &gt.dgamma);
  const auto parts = cfi_parts(st.dist, {});
  const auto& dist = st.dist;

  // C = Tr(w F^{-1}); dC = -Tr(Q dF) with Q = F^{-1} w F^{-1}.
  const Eigen::SelfAdjointEigenSolver<RMatrix> es(parts.fisher.matrix);
  const RVector& lam = es.eigenvalues();
  if (!(lam.minCoeff() > 0.0) || lam.maxCoeff() / lam.minCoeff() > 1e12) {
    throw UnidentifiableError("CFI is singular at this unitary", es.eigenvectors().col(0),
                              lam.minCoeff() > 0.0 ? lam.maxCoeff() / lam.minCoeff()
                                                   : std::numeric_limits<double>::infinity());
  }
  const RMatrix finv = es.eigenvectors() * lam.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const RMatrix q = finv * weight_ * finv;

  const Eigen::Index m = n + 2;
  RVector wl = RVector::Zero(m);          // dC / dP_l
  RMatrix vl = RMatrix::Zero(m, idx(p));  // dC / d(dP_l/dT_i)
  for (Eigen::Index l = 0; l < m; ++l) {
    if (!parts.included[static_cast<std::size_t>(l)]) continue;
    const RVector d = dist.dprobs.row(l).transpose();
    const double pl = dist.probs[l];
    const RVector qd = q * d;
    wl[l] = d.dot(qd) / (pl * pl);
    vl.row(l) = (-2.0 / pl) * qd.transpose();
  }
  // P_{n+1} and its derivative are minus the sum of the others.
  for (Eigen::Index l = 0; l <= n; ++l) {
    wl[l] -= wl[n + 1];
    vl.row(l) -= vl.row(n + 1);
  }

  const double p0 = st.p0;
  double adj_p0 = wl[0];
  for (Eigen::Index k = 0; k < n; ++k) adj_p0 += wl[k + 1] * st.kdiag[k];
  RVector tau = RVector::Zero(idx(p));
  RVector ck(n);
  for (Eigen::Index k = 0; k < n; ++k) ck[k] = p0 * wl[k + 1];
  for (std::size_t i = 0; i < p; ++i) {
    const auto c = idx(i);
    const double ti = st.t[c];
    adj_p0 -= vl(0, c) * ti;
    tau[c] = -p0 * vl(0, c);
    for (Eigen::Index k = 0; k < n; ++k) {
      adj_p0 += vl(k + 1, c) * (st.s(k, c) - st.kdiag[k] * ti);
      ck[k] -= p0 * vl(k + 1, c) * ti;
      tau[c] -= p0 * vl(k + 1, c) * st.kdiag[k];
    }
  }

  const CMatrix& a = st.a;
  CMatrix y = (-adj_p0 * p0) * a + a * ck.asDiagonal() * a;
  CMatrix g = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < p; ++i) {
    const auto c = idx(i);
    const RVector sigma = p0 * vl.col(c).segment(1, n);
    const CMatrix& d = gt.dgamma[i];
    const CMatrix ada = a * d * a;
    const CMatrix as = a * sigma.asDiagonal();
    const CMatrix asa = as * a;
    y -= tau[c] * ada + ada * sigma.asDiagonal() * a + as * ada;
    const CMatrix z = tau[c] * a + asa;
    g += z.transpose() * u * incoming_.dgamma[i].transpose();
  }
  g += y.transpose() * u * incoming_.gamma.transpose();
  return g;
}

CostFunction CcrbCost::as_cost_function() const {
  auto self = std::make_shared<const CcrbCost>(*this);
  CostFunction f;
  f.evaluate = [self](const CMatrix& u) { return self->value(u); };
  f.gradient = [self](const CMatrix& u) { return self->gradient(u); };
  f.dimension = static_cast<std::size_t>(incoming_.gamma.rows());
  return f;
}

}  // namespace qmet
