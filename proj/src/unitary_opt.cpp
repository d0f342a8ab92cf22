#include "qmet/unitary_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qmet/errors.hpp"
#include "qmet/parallel.hpp"

namespace qmet {

double inner(const CMatrix& x, const CMatrix& y) { return 0.5 * (x.adjoint() * y).trace().real(); }

CMatrix wirtinger_gradient_fd(const CostFunction& cost, const CMatrix& u, double h) {
  const Eigen::Index n = u.rows();
  CMatrix g(n, u.cols());
  CMatrix probe = u;
  auto eval = [&](Eigen::Index r, Eigen::Index c, Complex delta) {
    probe(r, c) = u(r, c) + delta;
    const double f = cost.evaluate(probe);
    probe(r, c) = u(r, c);
    if (!std::isfinite(f)) {
      std::ostringstream os;
      os << "cost is not finite at finite-difference probe (" << r << ", " << c << ") + " << delta;
      throw NumericalError(os.str());
    }
    return f;
  };
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double d_re = (eval(r, c, {h, 0.0}) - eval(r, c, {-h, 0.0})) / (2.0 * h);
      const double d_im = (eval(r, c, {0.0, h}) - eval(r, c, {0.0, -h})) / (2.0 * h);
      g(r, c) = 0.5 * Complex(d_re, d_im);
    }
  }
  return g;
}

CMatrix riemannian_gradient(const CMatrix& g, const CMatrix& u) {
  return g * u.adjoint() - u * g.adjoint();
}

GeodesicExponential::GeodesicExponential(const CMatrix& h) {
  const CMatrix k = Complex(0.0, 1.0) * h;
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (k + k.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of iH failed");
  v_ = es.eigenvectors();
  lambda_ = es.eigenvalues();
}

CMatrix GeodesicExponential::operator()(double alpha) const {
  // H = -i K, so exp(-alpha H) = exp(i alpha K) = V diag(e^{i alpha lambda}) V^dag.
  CVector phases(lambda_.size());
  for (Eigen::Index k = 0; k < lambda_.size(); ++k) phases[k] = std::polar(1.0, alpha * lambda_[k]);
  return v_ * phases.asDiagonal() * v_.adjoint();
}

namespace {

CMatrix reunitarize(CMatrix u) {
  if (unitarity_defect(u) > 1e-12) return polar_project(u);
  return u;
}

}  // namespace

UnitaryPoint geodesic_step(const CMatrix& u, const CMatrix& h, double alpha) {
  return UnitaryPoint(reunitarize(GeodesicExponential(h)(alpha) * u));
}

LineSearchResult armijo_line_search(const CostFunction& cost, const CMatrix& u, double f_u, const CMatrix& w,
                                    const CMatrix& h, double alpha_in, int max_steps) {
  const double slope = inner(w, h);
  if (!(slope > 0.0)) {
    throw ConfigError("line search requires a descent direction, got <W, H> = " + std::to_string(slope));
  }
  if (!(alpha_in > 0.0)) throw ConfigError("initial step must be positive");

  const GeodesicExponential expm(h);
  LineSearchResult res;
  double alpha = alpha_in;
  CMatrix p = expm(alpha);
  CMatrix q = p * p;
  double f_q = cost.evaluate(q * u);
  int steps = 1;

  bool p_evaluated = false;
  double f_p = 0.0;
  while (f_u - f_q >= alpha * slope) {
    if (++steps > max_steps) throw LineSearchError("line search exceeded step budget while doubling");
    p = q;
    f_p = f_q;
    p_evaluated = true;
    q = p * p;
    alpha *= 2.0;
    f_q = cost.evaluate(q * u);
  }

  if (!p_evaluated) {
    f_p = cost.evaluate(p * u);
    ++steps;
  }
  while (!(f_u - f_p >= 0.5 * alpha * slope)) {
    if (++steps > max_steps) throw LineSearchError("line search exceeded step budget while halving");
    alpha *= 0.5;
    p = expm(alpha);
    f_p = cost.evaluate(p * u);
  }

  res.alpha = alpha;
  res.u = reunitarize(p * u);
  res.cost = f_p;
  res.evaluations = steps;
  return res;
}

CgResult minimize(const CostFunction& cost, const CgOptions& opts, const std::optional<CMatrix>& start) {
  const std::size_t n = cost.dimension;
  if (n == 0) throw ConfigError("cost function dimension must be positive");
  if (opts.max_iters < 0 || opts.fd_step <= 0.0 || opts.plateau_window < 1 || opts.initial_alpha < 0.0) {
    throw ConfigError("invalid optimizer options");
  }
  const int reset = opts.reset_period > 0 ? opts.reset_period : static_cast<int>(n * n);

  CMatrix u;
  if (start) {
    u = UnitaryPoint(*start).matrix();
  } else {
    std::mt19937_64 rng(opts.seed);
    u = haar_unitary(n, rng);
  }
  auto grad = [&](const CMatrix& x) {
    return cost.gradient ? cost.gradient(x) : wirtinger_gradient_fd(cost, x, opts.fd_step);
  };

  CgResult res;
  double f = cost.evaluate(u);
  if (!std::isfinite(f)) throw NumericalError("cost is not finite at the starting unitary");
  res.trace.push_back(f);

  double alpha = opts.initial_alpha;
  CMatrix w, h;
  bool auto_alpha = !(alpha > 0.0);
  res.stop_reason = "max_iters";
  int k = 0;
  for (; k < opts.max_iters; ++k) {
    if (k % reset == 0) {
      w = riemannian_gradient(grad(u), u);
      h = w;
    }
    const double ww = inner(w, w);
    if (ww <= opts.gradient_tolerance) {
      res.converged = true;
      res.stop_reason = "gradient";
      break;
    }
    if (inner(w, h) <= 0.0) h = w;
    if (auto_alpha) {
      alpha = 0.1 / std::sqrt(2.0 * ww);
      auto_alpha = false;
    }

    LineSearchResult ls;
    try {
      ls = armijo_line_search(cost, u, f, w, h, alpha);
    } catch (const LineSearchError& e) {
      // Failing to find any decrease after an almost flat stretch means the
      // cost has hit rounding level; anything else is a genuine stall.
      const auto m = res.trace.size();
      const auto back = std::min<std::size_t>(m - 1, 3);
      const double scale = std::max(std::abs(f), std::numeric_limits<double>::min());
      if (back > 0 && std::abs(res.trace[m - 1 - back] - f) / scale < 1e-8) {
        res.converged = true;
        res.stop_reason = "precision";
      } else {
        res.warning = e.what();
        res.stop_reason = "line_search_stall";
      }
      break;
    }
    u = ls.u;
    f = ls.cost;
    alpha = ls.alpha;
    res.trace.push_back(f);

    const CMatrix w_next = riemannian_gradient(grad(u), u);
    const double gamma = inner(w_next - w, w_next) / ww;
    CMatrix h_next = w_next + gamma * h;
    if (inner(w_next, h_next) <= 0.0) h_next = w_next;
    w = w_next;
    h = h_next;

    const auto m = res.trace.size();
    if (m > static_cast<std::size_t>(opts.plateau_window)) {
      const double old = res.trace[m - 1 - static_cast<std::size_t>(opts.plateau_window)];
      const double scale = std::max(std::abs(f), std::numeric_limits<double>::min());
      if (std::abs(old - f) / scale < opts.plateau_tolerance) {
        res.converged = true;
        res.stop_reason = "plateau";
        ++k;
        break;
      }
    }
  }
  res.iterations = k;
  res.u = UnitaryPoint(u);
  res.cost = f;
  return res;
}

CgResult minimize_multistart(const CostFunction& cost, const CgOptions& opts, int starts) {
  if (starts < 1) throw ConfigError("need at least one start");
  std::vector<CgResult> results(static_cast<std::size_t>(starts));
  parallel_for(results.size(), [&](std::size_t i) {
    CgOptions o = opts;
    o.seed = derive_seed(opts.seed, i);
    results[i] = minimize(cost, o);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].cost < results[best].cost) best = i;
  }
  return results[best];
}

}  // namespace qmet
