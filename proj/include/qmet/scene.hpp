#pragma once

// Imaging geometry and the coherence matrix of the thermal Gaussian state
// received by the antenna array.
//
// Pixels and detectors are both indexed row-major (y outer, x inner). The
// coherence matrix is linear in the pixel temperatures,
//
//   Gamma_kl = sum_i T_i * dGamma_i(k, l),
//   dGamma_i(k, l) = (mu kappa a^2 / R^2) eta_kl exp(2 pi i (vx_kl x_i + vy_kl y_i)),
//
// with vx_kl = (x_l - x_k) / (lambda R), vy_kl likewise, and
// eta_kl = sincpi(vx_kl a) sincpi(vy_kl a), sincpi(u) = sin(pi u) / (pi u),
// which is the exact integral of the phase factor over a square pixel.

#include <cstddef>
#include <vector>

#include "qmet/types.hpp"

namespace qmet {

namespace constants {
inline constexpr double boltzmann = 1.380649e-23;      // J/K
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double speed_of_light = 299792458.0;  // m/s
}  // namespace constants

// 2 k_B / (pi hbar omega0) with omega0 = 2 pi c / lambda, in 1/K.
double compute_kappa(double wavelength);

struct PhysicsConstants {
  double kappa = 0.0;       // 1/K
  double mu = 1.0;          // loss factor in (0, 1]
  double wavelength = 0.0;  // m
  double bandwidth = 0.0;   // Hz, informational only

  static PhysicsConstants from_wavelength(double wavelength, double mu, double bandwidth = 0.0);
  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct GeometryConfig {
  double altitude = 0.0;    // R, m
  double pixel_size = 0.0;  // a, m
  int px = 1, py = 1;
  int nx = 1, ny = 1;
  double dx_max = 0.0;  // m
  double dy_max = 0.0;  // m
};

struct Geometry {
  GeometryConfig config;
  std::vector<Point2> pixel_centers;
  std::vector<Point2> detector_positions;

  std::size_t num_pixels() const { return pixel_centers.size(); }
  std::size_t num_modes() const { return detector_positions.size(); }
};

// Contiguous square pixel grid centred on the origin and a uniform detector
// array: x_j = (2j - px - 1) a / 2, x_k = (2k - nx - 1) dx_max / nx (1-based),
// applied independently per axis.
Geometry build_geometry(const GeometryConfig& config);

class TemperatureMap {
 public:
  TemperatureMap() = default;
  explicit TemperatureMap(RVector temps);
  static TemperatureMap uniform(std::size_t p, double t);

  const RVector& temps() const { return temps_; }
  std::size_t size() const { return static_cast<std::size_t>(temps_.size()); }
  double mean() const { return temps_.size() ? temps_.mean() : 0.0; }

 private:
  RVector temps_;
};

struct CoherenceMatrix {
  CMatrix gamma;
  MatrixStack dgamma;  // dGamma / dT_i, temperature independent

  std::size_t modes() const { return static_cast<std::size_t>(gamma.rows()); }
  std::size_t params() const { return dgamma.size(); }
};

double sincpi(double u);

// Temperature-independent derivative stack dGamma_i.
MatrixStack coherence_derivatives(const Geometry& geom, const PhysicsConstants& phys);

// sum_i temps_i * stack_i
CMatrix combine(const MatrixStack& stack, const RVector& temps);

CoherenceMatrix coherence_matrix(const Geometry& geom, const PhysicsConstants& phys,
                                 const TemperatureMap& temps);

}  // namespace qmet
