#include "qmet/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "qmet/errors.hpp"
#include "qmet/parallel.hpp"

namespace qmet {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

constexpr double kTiny = 1e-300;

struct Evaluation {
  double value = -std::numeric_limits<double>::infinity();
  RVector gradient;
  RMatrix fisher;  // total-count-scaled expected information
  bool feasible = false;
};

Evaluation evaluate(const RVector& counts, const ImagingModel& model, const RVector& theta, bool with_fisher) {
  Evaluation ev;
  OutcomeDistribution dist;
  try {
    dist = model.distribution(theta, true);
  } catch (const NumericalError&) {
    return ev;
  }
  const auto p = idx(model.params());
  const double total = counts.sum();
  ev.value = 0.0;
  ev.gradient = RVector::Zero(p);
  if (with_fisher) ev.fisher = RMatrix::Zero(p, p);
  for (Eigen::Index k = 0; k < counts.size(); ++k) {
    const double pk = dist.probs[k];
    const double nk = counts[k];
    if (pk <= kTiny) {
      if (nk > 0.0) {
        ev.value = -std::numeric_limits<double>::infinity();
        return ev;
      }
      continue;
    }
    const auto dk = dist.dprobs.row(k).transpose();
    if (nk > 0.0) {
      ev.value += nk * std::log(pk);
      ev.gradient += (nk / pk) * dk;
    }
    if (with_fisher) ev.fisher.noalias() += (total / pk) * dk * dk.transpose();
  }
  ev.feasible = true;
  return ev;
}

RVector clamp_box(const RVector& x, double hi) { return x.cwiseMax(0.0).cwiseMin(hi); }

// Solves F d = g on the free coordinates with eigenvalues floored relative to
// the largest, so weakly identified directions do not blow the step up.
RVector scoring_direction(const RMatrix& fisher, const RVector& g, const std::vector<bool>& free) {
  std::vector<Eigen::Index> ids;
  for (std::size_t i = 0; i < free.size(); ++i)
    if (free[i]) ids.push_back(idx(i));
  RVector d = RVector::Zero(g.size());
  if (ids.empty()) return d;
  const auto m = static_cast<Eigen::Index>(ids.size());
  RMatrix f(m, m);
  RVector gf(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    gf[a] = g[ids[a]];
    for (Eigen::Index b = 0; b < m; ++b) f(a, b) = fisher(ids[a], ids[b]);
  }
  const Eigen::SelfAdjointEigenSolver<RMatrix> es(f);
  const RVector& lam = es.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) return d;
  const double floor = 1e-12 * top;
  RVector coef = es.eigenvectors().transpose() * gf;
  for (Eigen::Index a = 0; a < m; ++a) coef[a] /= std::max(lam[a], floor);
  const RVector df = es.eigenvectors() * coef;
  for (Eigen::Index a = 0; a < m; ++a) d[ids[a]] = df[a];
  return d;
}

struct Ascent {
  RVector theta;
  Evaluation ev;
  int iterations = 0;
  bool converged = false;
  double decrement = 0.0;
  std::string note;
};

Ascent ascend(const RVector& counts, const ImagingModel& model, RVector theta, const MleOptions& opts) {
  Ascent out;
  theta = clamp_box(theta, opts.t_max);
  Evaluation ev = evaluate(counts, model, theta, true);
  if (!ev.feasible) {
    out.theta = theta;
    out.ev = ev;
    out.note = "infeasible start";
    return out;
  }
  const auto p = static_cast<std::size_t>(theta.size());
  const double edge = 1e-12 * std::max(1.0, theta.cwiseAbs().maxCoeff());

  int it = 0;
  for (; it < opts.max_iters; ++it) {
    std::vector<bool> free(p, true);
    for (std::size_t i = 0; i < p; ++i) {
      const auto j = idx(i);
      if ((theta[j] <= edge && ev.gradient[j] < 0.0) || (theta[j] >= opts.t_max - edge && ev.gradient[j] > 0.0))
        free[i] = false;
    }
    RVector d = scoring_direction(ev.fisher, ev.gradient, free);
    out.decrement = ev.gradient.dot(d);
    if (out.decrement < opts.decrement_tolerance) {
      out.converged = true;
      break;
    }

    auto try_direction = [&](const RVector& dir, Evaluation& next, RVector& cand) {
      double s = 1.0;
      for (int b = 0; b < 60; ++b, s *= 0.5) {
        cand = clamp_box(theta + s * dir, opts.t_max);
        if ((cand - theta).cwiseAbs().maxCoeff() == 0.0) return false;
        next = evaluate(counts, model, cand, true);
        if (next.feasible && next.value >= ev.value + 1e-4 * ev.gradient.dot(cand - theta)) return true;
      }
      return false;
    };

    Evaluation next;
    RVector cand;
    bool ok = try_direction(d, next, cand);
    if (!ok) {
      RVector pg = RVector::Zero(theta.size());
      for (std::size_t i = 0; i < p; ++i) {
        const auto j = idx(i);
        if (free[i]) pg[j] = ev.gradient[j] / std::max(ev.fisher(j, j), kTiny);
      }
      ok = try_direction(pg, next, cand);
    }
    if (!ok) {
      out.converged = out.decrement < std::sqrt(opts.decrement_tolerance);
      out.note = "no ascent step found";
      break;
    }
    const double change = std::abs(next.value - ev.value);
    theta = cand;
    ev = std::move(next);
    if (change <= opts.relative_tolerance * std::max(1.0, std::abs(ev.value)) &&
        out.decrement < std::sqrt(opts.decrement_tolerance)) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.theta = theta;
  out.ev = std::move(ev);
  return out;
}

}  // namespace

RVector MeasurementRecord::as_real() const {
  RVector r(idx(counts.size()));
  for (std::size_t k = 0; k < counts.size(); ++k) r[idx(k)] = static_cast<double>(counts[k]);
  return r;
}

MeasurementRecord sample_outcomes(const RVector& probs, std::uint64_t n, std::uint64_t seed) {
  if (probs.size() == 0) throw ConfigError("empty outcome distribution");
  if ((probs.array() < 0.0).any() || std::abs(probs.sum() - 1.0) > 1e-9) {
    throw ConfigError("outcome distribution must be nonnegative and sum to one");
  }
  MeasurementRecord rec;
  rec.total = n;
  rec.seed = seed;
  rec.counts.assign(static_cast<std::size_t>(probs.size()), 0);
  std::mt19937_64 rng(seed);
  std::uint64_t left = n;
  double mass = 1.0;
  for (Eigen::Index k = 0; k + 1 < probs.size() && left > 0; ++k) {
    const double q = mass > 0.0 ? std::clamp(probs[k] / mass, 0.0, 1.0) : 0.0;
    std::uint64_t draw = 0;
    if (q >= 1.0) {
      draw = left;
    } else if (q > 0.0) {
      std::binomial_distribution<std::uint64_t> bin(left, q);
      draw = bin(rng);
    }
    rec.counts[static_cast<std::size_t>(k)] = draw;
    left -= draw;
    mass -= probs[k];
  }
  rec.counts.back() += left;
  return rec;
}

ImagingModel::ImagingModel(const MatrixStack& dgamma, const UnitaryPoint& u) {
  CoherenceMatrix tmp;
  if (dgamma.empty()) throw ConfigError("imaging model needs at least one parameter");
  tmp.gamma = CMatrix::Zero(dgamma[0].rows(), dgamma[0].cols());
  tmp.dgamma = dgamma;
  stack_ = detection_coherence(tmp, u).dgamma;
}

ImagingModel::ImagingModel(const Geometry& geom, const PhysicsConstants& phys, const UnitaryPoint& u)
    : ImagingModel(coherence_derivatives(geom, phys), u) {}

CoherenceMatrix ImagingModel::coherence(const RVector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != stack_.size()) {
    throw ConfigError("temperature vector has " + std::to_string(theta.size()) + " entries, model has " +
                      std::to_string(stack_.size()));
  }
  return {combine(stack_, theta), stack_};
}

OutcomeDistribution ImagingModel::distribution(const RVector& theta, bool derivatives) const {
  const CoherenceMatrix g = coherence(theta);
  return derivatives ? probability_derivatives(g) : outcome_probabilities(g.gamma);
}

LogLikelihood log_likelihood(const RVector& counts, const ImagingModel& model, const RVector& theta) {
  if (static_cast<std::size_t>(counts.size()) != model.outcomes()) {
    throw ConfigError("count vector has " + std::to_string(counts.size()) + " outcomes, model has " +
                      std::to_string(model.outcomes()));
  }
  if ((counts.array() < 0.0).any()) throw ConfigError("counts must be nonnegative");
  const OutcomeDistribution dist = model.distribution(theta, true);
  LogLikelihood out;
  out.gradient = RVector::Zero(idx(model.params()));
  for (Eigen::Index k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0.0) continue;
    const double pk = dist.probs[k];
    if (pk <= kTiny) {
      throw InfeasiblePointError("outcome " + std::to_string(k) + " observed but has zero probability",
                                 static_cast<std::size_t>(k));
    }
    out.value += counts[k] * std::log(pk);
    out.gradient += (counts[k] / pk) * dist.dprobs.row(k).transpose();
  }
  return out;
}

double uniform_start(const RVector& counts, const ImagingModel& model) {
  const double total = counts.sum();
  if (!(total > 0.0)) return 0.0;
  const double n0 = std::max(counts[0], 0.5);
  double trace = 0.0;
  for (const auto& d : model.detection_stack()) trace += d.trace().real();
  if (!(trace > 0.0)) throw ConfigError("model has no sensitivity to temperature");
  return std::max(0.0, -std::log(n0 / total) / trace);
}

MleResult mle_estimate(const RVector& counts, const ImagingModel& model, const std::optional<RVector>& theta0,
                       const MleOptions& opts) {
  if (static_cast<std::size_t>(counts.size()) != model.outcomes()) {
    throw ConfigError("count vector does not match the model outcomes");
  }
  if (opts.starts < 1 || !(opts.t_max > 0.0)) throw ConfigError("invalid MLE options");
  const auto p = idx(model.params());

  MleResult res;
  if (!(counts.sum() > 0.0)) {
    res.theta_hat = theta0 ? clamp_box(*theta0, opts.t_max) : RVector::Zero(p);
    res.converged = true;
    res.diagnostics = "no data";
    return res;
  }

  const double t0 = std::min(uniform_start(counts, model), opts.t_max);
  std::vector<RVector> starts;
  starts.push_back(theta0 ? *theta0 : RVector::Constant(p, t0));
  for (int s = 1; s < opts.starts; ++s) {
    std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> normal;
    RVector x(p);
    for (Eigen::Index i = 0; i < p; ++i) x[i] = t0 * (1.0 + opts.perturbation * normal(rng));
    starts.push_back(x);
  }

  std::ostringstream diag;
  bool any = false;
  Ascent best;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    Ascent a = ascend(counts, model, starts[s], opts);
    diag << "start " << s << ": L=" << a.ev.value << " iters=" << a.iterations
         << (a.converged ? " converged" : " not converged");
    if (!a.note.empty()) diag << " (" << a.note << ")";
    diag << "; ";
    if (!a.ev.feasible) continue;
    if (!any || a.ev.value > best.ev.value) {
      best = std::move(a);
      res.start_index = static_cast<int>(s);
      any = true;
    }
  }
  if (!any) throw InfeasiblePointError("every MLE start is infeasible", 0);
  res.theta_hat = best.theta;
  res.log_likelihood = best.ev.value;
  res.iterations = best.iterations;
  res.converged = best.converged;
  res.decrement = best.decrement;
  res.diagnostics = diag.str();
  return res;
}

}  // namespace qmet
