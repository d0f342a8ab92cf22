#pragma once

// Riemannian conjugate gradient over the unitary group U(n).
//
// Each iteration moves along the geodesic U <- exp(-alpha H) U, where H is a
// skew-Hermitian search direction built from the Riemannian gradient
// W = G U^dag - U G^dag and G = dF/dU* is the Euclidean (Wirtinger) gradient.
// Step sizes follow an Armijo doubling/halving rule and directions are
// updated with Polak-Ribiere, resetting to the gradient every n^2 iterations
// or whenever the direction stops being a descent direction.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qmet/types.hpp"
#include "qmet/unitary.hpp"

namespace qmet {

struct CostFunction {
  std::function<double(const CMatrix&)> evaluate;
  // Optional analytic G = dF/dU* = 1/2 (dF/dRe U + i dF/dIm U).
  std::function<CMatrix(const CMatrix&)> gradient;
  std::size_t dimension = 0;
};

// <X, Y> = Re Tr(X^dag Y) / 2, the bi-invariant metric on U(n).
double inner(const CMatrix& x, const CMatrix& y);

// Central differences on the real and imaginary part of every entry.
CMatrix wirtinger_gradient_fd(const CostFunction& cost, const CMatrix& u, double h = 1e-6);

// W = G U^dag - U G^dag
CMatrix riemannian_gradient(const CMatrix& g, const CMatrix& u);

// exp(-alpha H) evaluated through the Hermitian eigendecomposition of iH, so
// one decomposition serves every step length tried by the line search.
class GeodesicExponential {
 public:
  explicit GeodesicExponential(const CMatrix& h);
  CMatrix operator()(double alpha) const;

 private:
  CMatrix v_;
  RVector lambda_;
};

// exp(-alpha H) U, re-projected onto U(n) if rounding drift exceeds 1e-12.
UnitaryPoint geodesic_step(const CMatrix& u, const CMatrix& h, double alpha);

struct LineSearchResult {
  double alpha = 0.0;
  CMatrix u;       // accepted point exp(-alpha H) U
  double cost = 0.0;
  int evaluations = 0;
};

// Armijo rule: double alpha while F(U) - F(exp(-2 alpha H) U) >= alpha <W, H>,
// then halve while F(U) - F(exp(-alpha H) U) < (alpha / 2) <W, H>.
// Throws ConfigError if <W, H> <= 0 and LineSearchError after max_steps trials.
LineSearchResult armijo_line_search(const CostFunction& cost, const CMatrix& u, double f_u,
                                    const CMatrix& w, const CMatrix& h, double alpha_in,
                                    int max_steps = 60);

struct CgOptions {
  int max_iters = 2000;
  double fd_step = 1e-6;
  double plateau_tolerance = 1e-10;  // relative cost change ...
  int plateau_window = 20;           // ... over this many iterations
  double gradient_tolerance = 1e-14; // on <W, W>
  int reset_period = 0;              // 0 means n^2
  // First trial step; 0 picks 0.1 / |W|_F so the first rotation is small
  // whatever the scale of the cost. Later iterations carry alpha forward.
  double initial_alpha = 0.0;
  std::uint64_t seed = 1;
};

struct CgResult {
  UnitaryPoint u;
  double cost = 0.0;
  std::vector<double> trace;  // cost after every accepted iterate, trace[0] is the start
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::optional<std::string> warning;  // set when the line search stalled
};

CgResult minimize(const CostFunction& cost, const CgOptions& opts,
                  const std::optional<CMatrix>& start = std::nullopt);

// Runs `starts` independent minimisations with seeds derived from opts.seed
// and returns the best. Starts run on the shared work pool.
CgResult minimize_multistart(const CostFunction& cost, const CgOptions& opts, int starts);

}  // namespace qmet
