// qmet: batch runner for the imaging experiments.
//
//   qmet two-pixel   --scenario two-pixel --grid 200 --out out/two
//   qmet sweep       --scenario line-3 --grid mu:0.05,0.1,0.5 --out out/mu
//   qmet optimize    --scenario line-5 --seed 3 --out out/opt
//   qmet reconstruct --scenario image-6x5 --unitary image-optimal --samples 1e7 --reps 10
//   qmet check
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qmet/errors.hpp"
#include "qmet/io.hpp"
#include "qmet/runners.hpp"
#include "qmet/scenario.hpp"
#include "qmet/selfcheck.hpp"

namespace {

using namespace qmet;

struct Common {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out;
  std::string grid;
  std::string unitary;
  double samples = 0.0;
  int reps = 0;
  bool full = false;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_scenario) {
  c.scenario = default_scenario;
  cmd->add_option("--scenario", c.scenario, "scenario JSON file or builtin name")->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--grid", c.grid, "grid specification");
  cmd->add_option("--unitary", c.unitary, "unitary file or mode");
  cmd->add_option("--samples", c.samples, "sample size N");
  cmd->add_option("--reps", c.reps, "replications");
  cmd->add_flag("--full", c.full, "full-scale run");
}

std::string out_dir(const Common& c, const std::string& verb) { return c.out.empty() ? "qmet-" + verb : c.out; }

std::string fmt(double x) { return io::format_double(x); }

const auto g_start = std::chrono::steady_clock::now();
double elapsed() { return std::chrono::duration<double>(std::chrono::steady_clock::now() - g_start).count(); }

int run_two_pixel(const Common& c) {
  const Scenario s = load_scenario(c.scenario);
  TwoPixelOptions o;
  if (!c.grid.empty()) o.phi_steps = std::stoi(c.grid);
  o.mean_t = s.temps.mean();
  const TwoPixelReport r = two_pixel_sweep(s, o);

  io::RunManifest m(out_dir(c, "two-pixel"), "two-pixel", s.source, c.seed);
  m.emit("phi_sweep.csv", r.phi_table.str());
  m.emit("local_vs_dT.csv", r.local_table.str());
  io::CsvTable sum;
  sum.header = {"phi_opt", "ccrb_min_norm", "qcrb_norm", "ratio", "gain_cfi", "gain_qfi"};
  sum.add({r.minimum.phi, r.ccrb_min_norm, r.qcrb_norm, r.ccrb_min_norm / r.qcrb_norm, r.cfi_gain_at_min, r.qfi_gain});
  m.emit("summary.csv", sum.str());
  std::cout << "phi_opt/pi = " << fmt(r.minimum.phi / 3.141592653589793) << "\nCCRB/T^2 = " << fmt(r.ccrb_min_norm)
            << "\nQCRB/T^2 = " << fmt(r.qcrb_norm) << "\nCCRB/QCRB = " << fmt(r.ccrb_min_norm / r.qcrb_norm)
            << "\ngain (CFI at optimum) = " << fmt(r.cfi_gain_at_min) << "\ngain (QFI) = " << fmt(r.qfi_gain)
            << "\n";
  m.finish(elapsed());
  return 0;
}

int run_sweep(const Common& c) {
  const Scenario s = load_scenario(c.scenario);
  SweepOptions o = parse_sweep_grid(c.grid.empty() ? "mu:0.05,0.1,0.5" : c.grid);
  o.seed = c.seed;
  if (c.samples > 0.0) o.samples = c.samples;
  if (c.full) o.starts = 8;
  if (c.reps > 0) o.starts = c.reps;
  const SweepReport r = bound_sweep(s, o);
  io::RunManifest m(out_dir(c, "sweep"), "sweep " + (c.grid.empty() ? std::string("mu:0.05,0.1,0.5") : c.grid),
                    s.source, c.seed);
  m.emit("sweep.csv", r.table.str());
  std::cout << r.table.str();
  m.finish(elapsed());
  return 0;
}

int run_optimize(const Common& c) {
  const Scenario s = load_scenario(c.scenario);
  OptimizeOptions o;
  o.seed = c.seed;
  if (c.full) o.starts = 8;
  if (c.reps > 0) o.starts = c.reps;
  const OptimizeReport r = optimize_unitary(s, o);
  io::RunManifest m(out_dir(c, "optimize"), "optimize", s.source, c.seed);
  m.emit("unitary.csv", io::matrix_csv(r.result.u.matrix()));
  m.emit("unitary.json", io::unitary_json(r.result.u.matrix()));
  io::CsvTable trace;
  trace.header = {"iteration", "cost"};
  for (std::size_t k = 0; k < r.result.trace.size(); ++k) trace.add({static_cast<double>(k), r.result.trace[k]});
  m.emit("trace.csv", trace.str());
  io::CsvTable sum;
  sum.header = {"ccrb", "qcrb", "ratio", "iterations", "converged"};
  sum.add({r.ccrb, r.qcrb, r.ratio, static_cast<double>(r.result.iterations), r.result.converged ? 1.0 : 0.0});
  m.emit("summary.csv", sum.str());
  m.note("stop_reason", r.result.stop_reason);
  if (r.result.warning) {
    m.note("warning", *r.result.warning);
    std::cerr << "warning: " << *r.result.warning << "\n";
  }
  std::cout << "CCRB = " << fmt(r.ccrb) << "\nQCRB = " << fmt(r.qcrb) << "\nCCRB/QCRB = " << fmt(r.ratio)
            << "\niterations = " << r.result.iterations << " (" << r.result.stop_reason << ")\n";
  m.finish(elapsed());
  return 0;
}

std::string file_label(const std::string& mode) {
  if (mode == "identity" || mode == "uniform-optimal" || mode == "image-optimal") return mode;
  return std::filesystem::path(mode).stem().string();
}

int run_reconstruct(const Common& c) {
  const Scenario s = load_scenario(c.scenario);
  ReconstructOptions o;
  o.seed = c.seed;
  o.optimize.seed = c.seed;
  if (c.full) {
    o.samples = 100000000;
    o.optimize.starts = 8;
  }
  if (c.samples > 0.0) {
    if (c.samples < 1.0 || c.samples > 1e18) throw ConfigError("--samples must be in [1, 1e18]");
    o.samples = static_cast<std::uint64_t>(c.samples);
  }
  if (c.reps > 0) o.replications = c.reps;
  if (!c.unitary.empty()) {
    o.unitaries.clear();
    std::istringstream in(c.unitary);
    std::string item;
    while (std::getline(in, item, ',')) o.unitaries.push_back(item);
  }
  const ReconstructReport r = reconstruct(s, o);

  io::RunManifest m(out_dir(c, "reconstruct"), "reconstruct " + c.unitary, s.source, c.seed);
  const int cols = s.geometry.px;
  m.emit("truth.csv", io::grid_csv(r.truth, cols));
  io::CsvTable metrics;
  metrics.header = {"variant", "replication", "rmse", "converged"};
  io::CsvTable sum;
  sum.header = {"variant", "ccrb", "median_rmse", "mean_rmse", "crb_rmse"};
  const double p = static_cast<double>(r.truth.size());
  for (std::size_t v = 0; v < r.variants.size(); ++v) {
    const auto& var = r.variants[v];
    const std::string label = file_label(var.label);
    RVector mean = RVector::Zero(r.truth.size());
    for (const auto& e : var.estimates) mean += e;
    mean /= static_cast<double>(var.estimates.size());
    m.emit("image_" + label + ".csv", io::grid_csv(var.estimates.front(), cols));
    m.emit("error_" + label + ".csv", io::grid_csv(mean - r.truth, cols));
    m.emit("unitary_" + label + ".csv", io::matrix_csv(var.u));
    for (std::size_t k = 0; k < var.rmse.size(); ++k)
      metrics.add({static_cast<double>(v), static_cast<double>(k), var.rmse[k], var.converged[k] ? 1.0 : 0.0});
    const double crb_rmse = std::sqrt(var.ccrb / (p * static_cast<double>(o.samples)));
    sum.add({static_cast<double>(v), var.ccrb, var.median_rmse, var.mean_rmse, crb_rmse});
    std::cout << var.label << ": median RMSE = " << fmt(var.median_rmse) << " K, CRB RMSE = " << fmt(crb_rmse)
              << " K\n";
    m.note("variant_" + std::to_string(v), var.label);
  }
  m.emit("metrics.csv", metrics.str());
  m.emit("summary.csv", sum.str());
  m.finish(elapsed());
  return 0;
}

int run_check(const Common& c) {
  bool ok = true;
  for (const auto& r : run_self_checks(c.seed)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-limited passive imaging simulator"};
  app.require_subcommand(1);
  Common two, sweep, opt, rec, chk;
  add_common(app.add_subcommand("two-pixel", "phi sweep and local-measurement penalty for two pixels"), two,
             "two-pixel");
  add_common(app.add_subcommand("sweep", "bounds versus mu, pixel size a or pixel count p"), sweep, "line-3");
  add_common(app.add_subcommand("optimize", "optimise the detection unitary"), opt, "two-pixel");
  add_common(app.add_subcommand("reconstruct", "sample photon counts and reconstruct by MLE"), rec, "image-6x5");
  add_common(app.add_subcommand("check", "run the built-in oracle checks"), chk, "two-pixel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    int rc = 0;
    if (app.got_subcommand("two-pixel")) rc = run_two_pixel(two);
    else if (app.got_subcommand("sweep")) rc = run_sweep(sweep);
    else if (app.got_subcommand("optimize")) rc = run_optimize(opt);
    else if (app.got_subcommand("reconstruct")) rc = run_reconstruct(rec);
    else rc = run_check(chk);
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
