#include "qmet/runners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "qmet/errors.hpp"
#include "qmet/gaussian_fisher.hpp"
#include "qmet/parallel.hpp"
#include "qmet/photon_povm.hpp"

namespace qmet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + cell + "' in grid specification");
    }
  }
  if (out.empty()) throw ConfigError("grid specification has no values");
  return out;
}

}  // namespace

bool BoundValue::finite() const { return std::isfinite(value); }

BoundValue ccrb_at(const CoherenceMatrix& incoming, const CMatrix& u) {
  const auto dist = probability_derivatives(transform_coherence(incoming, u));
  CfiOptions co;
  co.throw_on_degenerate = false;
  const FisherMatrix f = cfi_matrix(dist, co);
  BoundValue b;
  b.condition = condition_number(f);
  try {
    b.value = scalar_bound(f);
  } catch (const UnidentifiableError&) {
    b.value = kInf;
  }
  return b;
}

double qcrb_of(const CoherenceMatrix& incoming) {
  return scalar_bound(qfi_matrix(covariance_from_coherence(incoming)));
}

PhiGridMinimum phi_grid_minimum(const CoherenceMatrix& incoming, int phi_steps) {
  if (incoming.modes() != 2) throw ConfigError("phi grid needs a two-mode scene");
  if (phi_steps < 2) throw ConfigError("phi grid needs at least two steps");
  PhiGridMinimum best{0.0, kInf, -1};
  for (int k = 0; k <= phi_steps; ++k) {
    const double phi = std::numbers::pi * k / phi_steps;
    const double c = ccrb_at(incoming, two_mode_unitary(phi)).value;
    if (c < best.ccrb) best = {phi, c, k};
  }
  if (best.index < 0) throw NumericalError("CFI is singular on the whole phi grid");
  return best;
}

TwoPixelReport two_pixel_sweep(const Scenario& s, const TwoPixelOptions& opts) {
  if (s.geometry.px * s.geometry.py != 2 || s.geometry.nx * s.geometry.ny != 2) {
    throw ConfigError("two-pixel sweep needs p = n = 2");
  }
  const Geometry geom = s.build();
  const CoherenceMatrix incoming = coherence_matrix(geom, s.physics, s.temps);
  const double tbar2 = s.temps.mean() * s.temps.mean();
  const FisherMatrix qfi = qfi_matrix(covariance_from_coherence(incoming));

  TwoPixelReport rep;
  rep.qcrb_norm = scalar_bound(qfi) / tbar2;
  rep.qfi_gain = gain_factor(qfi);
  rep.phi_table.header = {"phi", "F11", "F22", "ccrb_norm", "qcrb_norm", "gain_cfi", "gain_qfi"};
  CfiOptions co;
  co.throw_on_degenerate = false;
  for (int k = 0; k <= opts.phi_steps; ++k) {
    const double phi = std::numbers::pi * k / opts.phi_steps;
    const auto dist = probability_derivatives(transform_coherence(incoming, two_mode_unitary(phi)));
    const FisherMatrix f = cfi_matrix(dist, co);
    double bound = kInf;
    double gain = std::numeric_limits<double>::quiet_NaN();
    try {
      bound = scalar_bound(f);
      gain = gain_factor(f);
    } catch (const UnidentifiableError&) {
    }
    rep.phi_table.add({phi, f.matrix(0, 0) * tbar2, f.matrix(1, 1) * tbar2, bound / tbar2, rep.qcrb_norm, gain,
                       rep.qfi_gain});
  }
  rep.minimum = phi_grid_minimum(incoming, opts.phi_steps);
  rep.ccrb_min_norm = rep.minimum.ccrb / tbar2;
  {
    const auto dist = probability_derivatives(transform_coherence(incoming, two_mode_unitary(rep.minimum.phi)));
    rep.cfi_gain_at_min = gain_factor(cfi_matrix(dist, co));
  }

  rep.local_table.header = {"dT", "local_norm", "optimal_norm", "qcrb_norm", "local_over_optimal", "local_cond"};
  const double tm = opts.mean_t;
  const double tm2 = tm * tm;
  for (double dt : opts.delta_t) {
    RVector t(2);
    t << tm + 0.5 * dt, tm - 0.5 * dt;
    const CoherenceMatrix inc = coherence_matrix(geom, s.physics, TemperatureMap(t));
    const BoundValue local = ccrb_at(inc, CMatrix::Identity(2, 2));
    const double opt = phi_grid_minimum(inc, opts.phi_steps).ccrb;
    rep.local_table.add({dt, local.value / tm2, opt / tm2, qcrb_of(inc) / tm2, local.value / opt, local.condition});
  }
  return rep;
}

SweepOptions parse_sweep_grid(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("sweep grid must look like 'mu:0.05,0.1'");
  const std::string key = spec.substr(0, colon);
  SweepOptions o;
  if (key == "mu") {
    o.variable = SweepVariable::mu;
  } else if (key == "a") {
    o.variable = SweepVariable::pixel_size;
  } else if (key == "p") {
    o.variable = SweepVariable::pixels;
  } else {
    throw ConfigError("unknown sweep variable '" + key + "' (expected mu, a or p)");
  }
  o.values = parse_list(spec.substr(colon + 1));
  return o;
}

Scenario sweep_scenario(const Scenario& base, SweepVariable v, double value, std::uint64_t seed) {
  if (base.geometry.py != 1 || base.geometry.ny != 1) throw ConfigError("bound sweeps need a 1D scenario");
  Scenario s = base;
  switch (v) {
    case SweepVariable::mu:
      s.physics.mu = value;
      s.physics.validate();
      break;
    case SweepVariable::pixel_size:
      s.geometry.pixel_size = value;
      break;
    case SweepVariable::pixels: {
      const int p = static_cast<int>(std::lround(value));
      if (p < 1 || std::abs(value - p) > 1e-9) throw ConfigError("pixel counts must be positive integers");
      s.geometry.px = s.geometry.nx = p;
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
      std::uniform_real_distribution<double> jitter(-0.1, 0.1);
      const double tbar = base.temps.mean();
      RVector t(p);
      for (int i = 0; i < p; ++i) t[i] = tbar * (1.0 + jitter(rng));
      s.temps = TemperatureMap(t);
      break;
    }
  }
  build_geometry(s.geometry);
  return s;
}

OptimizeReport optimize_unitary(const CoherenceMatrix& incoming, const OptimizeOptions& opts) {
  CgOptions cg = opts.cg;
  cg.seed = opts.seed;
  const CcrbCost cost(incoming);
  OptimizeReport rep;
  rep.result = minimize_multistart(cost.as_cost_function(), cg, opts.starts);
  rep.qcrb = qcrb_of(incoming);
  rep.ccrb = rep.result.cost;
  rep.ratio = rep.ccrb / rep.qcrb;
  return rep;
}

OptimizeReport optimize_unitary(const Scenario& s, const OptimizeOptions& opts) {
  return optimize_unitary(s.coherence(), opts);
}

SweepReport bound_sweep(const Scenario& base, const SweepOptions& opts) {
  if (opts.values.empty()) throw ConfigError("sweep has no grid values");
  if (!(opts.samples > 0.0)) throw ConfigError("sample size must be positive");
  SweepReport rep;
  rep.table.header = {"value", "trace_gamma", "qcrb", "ccrb_opt", "ccrb_uniform_opt", "ccrb_random", "ratio", "flag"};
  for (std::size_t r = 0; r < opts.values.size(); ++r) {
    const Scenario s = sweep_scenario(base, opts.variable, opts.values[r], opts.seed);
    const Geometry geom = s.build();
    const CoherenceMatrix inc = coherence_matrix(geom, s.physics, s.temps);
    const double tbar = s.temps.mean();
    const double scale = 1.0 / (tbar * tbar * opts.samples);

    OptimizeOptions oo{opts.starts, derive_seed(opts.seed, r), opts.cg};
    const OptimizeReport opt = optimize_unitary(inc, oo);
    const CoherenceMatrix uniform_inc =
        coherence_matrix(geom, s.physics, TemperatureMap::uniform(s.temps.size(), tbar));
    const OptimizeReport uopt = optimize_unitary(uniform_inc, oo);
    std::mt19937_64 rng(derive_seed(opts.seed, 1000 + r));

    SweepRow row;
    row.value = opts.values[r];
    row.trace_gamma = inc.gamma.trace().real();
    row.qcrb = opt.qcrb * scale;
    row.ccrb_opt = opt.ccrb * scale;
    row.ccrb_uniform_opt = ccrb_at(inc, uopt.result.u.matrix()).value * scale;
    row.ccrb_random = ccrb_at(inc, haar_unitary(inc.modes(), rng)).value * scale;
    row.flagged = opt.result.warning.has_value() || uopt.result.warning.has_value();
    rep.rows.push_back(row);
    rep.table.add({row.value, row.trace_gamma, row.qcrb, row.ccrb_opt, row.ccrb_uniform_opt, row.ccrb_random,
                   row.ccrb_opt / row.qcrb, row.flagged ? 1.0 : 0.0});
  }
  return rep;
}

CMatrix resolve_unitary(const std::string& mode, const Scenario& s, const OptimizeOptions& opts) {
  const auto n = static_cast<Eigen::Index>(s.geometry.nx * s.geometry.ny);
  if (mode == "identity") return CMatrix::Identity(n, n);
  if (mode == "image-optimal") return optimize_unitary(s, opts).result.u.matrix();
  if (mode == "uniform-optimal") {
    Scenario u = s;
    u.temps = TemperatureMap::uniform(s.temps.size(), s.temps.mean());
    return optimize_unitary(u, opts).result.u.matrix();
  }
  const CMatrix m = io::read_unitary(mode);
  if (m.rows() != n) {
    throw ConfigError("unitary in " + mode + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                      ", scenario has " + std::to_string(n) + " modes");
  }
  return UnitaryPoint(m).matrix();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double rmse(const RVector& a, const RVector& b) {
  if (a.size() != b.size() || a.size() == 0) throw ConfigError("rmse needs equal, non-empty vectors");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

ReconstructReport reconstruct(const Scenario& s, const ReconstructOptions& opts) {
  if (opts.replications < 1) throw ConfigError("need at least one replication");
  if (opts.samples < 1) throw ConfigError("sample size must be at least 1");
  const CoherenceMatrix inc = s.coherence();
  ReconstructReport rep;
  rep.truth = s.temps.temps();

  for (const auto& label : opts.unitaries) {
    ReconstructVariant var;
    var.label = label;
    var.u = resolve_unitary(label, s, opts.optimize);
    var.ccrb = ccrb_at(inc, var.u).value;
    const ImagingModel model(inc.dgamma, UnitaryPoint(var.u));
    const RVector probs = model.distribution(rep.truth, false).probs;

    const auto reps = static_cast<std::size_t>(opts.replications);
    var.estimates.resize(reps);
    var.rmse.resize(reps);
    var.converged.resize(reps);
    std::vector<char> conv(reps, 0);
    parallel_for(reps, [&](std::size_t r) {
      const auto rec = sample_outcomes(probs, opts.samples, derive_seed(opts.seed, r));
      MleOptions mo = opts.mle;
      mo.seed = derive_seed(opts.mle.seed, r);
      const MleResult mle = mle_estimate(rec.as_real(), model, std::nullopt, mo);
      var.estimates[r] = mle.theta_hat;
      var.rmse[r] = rmse(mle.theta_hat, rep.truth);
      conv[r] = mle.converged ? 1 : 0;
    });
    for (std::size_t r = 0; r < reps; ++r) var.converged[r] = conv[r] != 0;
    var.median_rmse = median(var.rmse);
    double sum = 0.0;
    for (double x : var.rmse) sum += x;
    var.mean_rmse = sum / static_cast<double>(reps);
    rep.variants.push_back(std::move(var));
  }
  return rep;
}

}  // namespace qmet
