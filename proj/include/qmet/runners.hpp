#pragma once

// Batch experiments behind the CLI verbs. Each runner returns its tables and
// headline numbers so the same code drives the CLI and the acceptance suite.
// Bounds are reported in the dimensionless convention Tr(F^{-1}) / Tbar^2 and
// divided by the sample size N.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmet/inference.hpp"
#include "qmet/io.hpp"
#include "qmet/scenario.hpp"
#include "qmet/unitary_opt.hpp"

namespace qmet {

// Scalar bound at a unitary, or +inf with the CFI condition number when the
// CFI is numerically singular.
struct BoundValue {
  double value = 0.0;
  double condition = 0.0;
  bool finite() const;
};
BoundValue ccrb_at(const CoherenceMatrix& incoming, const CMatrix& u);
double qcrb_of(const CoherenceMatrix& incoming);

struct TwoPixelOptions {
  int phi_steps = 200;  // grid step pi / phi_steps over [0, pi]
  std::vector<double> delta_t = {0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0};
  double mean_t = 300.0;
};

struct PhiGridMinimum {
  double phi = 0.0;
  double ccrb = 0.0;  // raw Tr(F^{-1}), K^2
  int index = 0;
};
PhiGridMinimum phi_grid_minimum(const CoherenceMatrix& incoming, int phi_steps);

struct TwoPixelReport {
  io::CsvTable phi_table;    // phi, F11, F22, ccrb/T^2, qcrb/T^2, gain_cfi, gain_qfi
  io::CsvTable local_table;  // dT, local/T^2, optimal/T^2, qcrb/T^2, ratio, cond(local CFI)
  double qcrb_norm = 0.0;
  double qfi_gain = 0.0;
  PhiGridMinimum minimum;
  double ccrb_min_norm = 0.0;
  double cfi_gain_at_min = 0.0;
};
TwoPixelReport two_pixel_sweep(const Scenario& s, const TwoPixelOptions& opts = {});

enum class SweepVariable { mu, pixel_size, pixels };

struct SweepOptions {
  SweepVariable variable = SweepVariable::mu;
  std::vector<double> values;
  double samples = 1.0;
  int starts = 4;
  std::uint64_t seed = 1;
  CgOptions cg;
};

struct SweepRow {
  double value = 0.0;
  double trace_gamma = 0.0;
  double qcrb = 0.0;
  double ccrb_opt = 0.0;
  double ccrb_uniform_opt = 0.0;
  double ccrb_random = 0.0;
  bool flagged = false;  // optimizer stalled
};

struct SweepReport {
  std::vector<SweepRow> rows;
  io::CsvTable table;
};

// Parses "mu:0.05,0.1,0.5", "a:1000,2000" or "p:2,3,4".
SweepOptions parse_sweep_grid(const std::string& spec);
Scenario sweep_scenario(const Scenario& base, SweepVariable v, double value, std::uint64_t seed);
SweepReport bound_sweep(const Scenario& base, const SweepOptions& opts);

struct OptimizeOptions {
  int starts = 4;
  std::uint64_t seed = 1;
  CgOptions cg;
};

struct OptimizeReport {
  CgResult result;
  double qcrb = 0.0;
  double ccrb = 0.0;
  double ratio = 0.0;
};
OptimizeReport optimize_unitary(const CoherenceMatrix& incoming, const OptimizeOptions& opts = {});
OptimizeReport optimize_unitary(const Scenario& s, const OptimizeOptions& opts = {});

// "identity", "uniform-optimal", "image-optimal", or a .csv/.json path.
CMatrix resolve_unitary(const std::string& mode, const Scenario& s, const OptimizeOptions& opts);

struct ReconstructOptions {
  std::vector<std::string> unitaries = {"identity", "uniform-optimal", "image-optimal"};
  std::uint64_t samples = 1000000;
  int replications = 10;
  std::uint64_t seed = 1;
  OptimizeOptions optimize;
  MleOptions mle;
};

struct ReconstructVariant {
  std::string label;
  CMatrix u;
  double ccrb = 0.0;
  std::vector<RVector> estimates;
  std::vector<double> rmse;
  std::vector<bool> converged;
  double median_rmse = 0.0;
  double mean_rmse = 0.0;
};

struct ReconstructReport {
  RVector truth;
  std::vector<ReconstructVariant> variants;
};
ReconstructReport reconstruct(const Scenario& s, const ReconstructOptions& opts);

double median(std::vector<double> v);
double rmse(const RVector& a, const RVector& b);

}  // namespace qmet
