#include "qmet/scene.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qmet/errors.hpp"
#include "qmet/kernels.hpp"

namespace qmet {

double compute_kappa(double wavelength) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw ConfigError("wavelength must be positive, got " + std::to_string(wavelength));
  }
  const double omega0 = 2.0 * std::numbers::pi * constants::speed_of_light / wavelength;
  return 2.0 * constants::boltzmann / (std::numbers::pi * constants::hbar * omega0);
}

PhysicsConstants PhysicsConstants::from_wavelength(double wavelength, double mu, double bandwidth) {
  PhysicsConstants phys{compute_kappa(wavelength), mu, wavelength, bandwidth};
  phys.validate();
  return phys;
}

void PhysicsConstants::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0, 1], got " + std::to_string(mu));
  if (!(wavelength > 0.0)) throw ConfigError("wavelength must be positive");
}

namespace {

std::vector<double> axis_positions(int count, double spacing_numerator, double denominator) {
  std::vector<double> pos(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) {
    pos[static_cast<std::size_t>(j - 1)] = (2.0 * j - count - 1.0) * spacing_numerator / denominator;
  }
  return pos;
}

}  // namespace

Geometry build_geometry(const GeometryConfig& c) {
  if (c.px < 1 || c.py < 1 || c.nx < 1 || c.ny < 1) {
    throw ConfigError("pixel and detector counts must be >= 1");
  }
  if (!(c.pixel_size > 0.0)) throw ConfigError("pixel size must be positive");
  if (!(c.altitude > 0.0)) throw ConfigError("altitude R must be positive");
  if (!(c.dx_max > 0.0) || !(c.dy_max > 0.0)) throw ConfigError("maximum baselines must be positive");
  if (c.px * c.py != c.nx * c.ny) {
    throw ConfigError("number of pixels (" + std::to_string(c.px * c.py) +
                      ") must equal number of detection modes (" + std::to_string(c.nx * c.ny) + ")");
  }

  Geometry g;
  g.config = c;
  const auto px = axis_positions(c.px, c.pixel_size, 2.0);
  const auto py = axis_positions(c.py, c.pixel_size, 2.0);
  const auto dx = axis_positions(c.nx, c.dx_max, c.nx);
  const auto dy = axis_positions(c.ny, c.dy_max, c.ny);
  for (double y : py)
    for (double x : px) g.pixel_centers.push_back({x, y});
  for (double y : dy)
    for (double x : dx) g.detector_positions.push_back({x, y});
  return g;
}

TemperatureMap::TemperatureMap(RVector temps) : temps_(std::move(temps)) {
  for (Eigen::Index i = 0; i < temps_.size(); ++i) {
    if (!(temps_[i] >= 0.0) || !std::isfinite(temps_[i])) {
      throw ConfigError("temperature " + std::to_string(i) + " must be finite and >= 0");
    }
  }
}

TemperatureMap TemperatureMap::uniform(std::size_t p, double t) {
  return TemperatureMap(RVector::Constant(static_cast<Eigen::Index>(p), t));
}

double sincpi(double u) {
  if (std::abs(u) < 1e-8) {
    const double x = std::numbers::pi * u;
    return 1.0 - x * x / 6.0;
  }
  const double x = std::numbers::pi * u;
  return std::sin(x) / x;
}

MatrixStack coherence_derivatives(const Geometry& geom, const PhysicsConstants& phys) {
  phys.validate();
  const auto& c = geom.config;
  const std::size_t n = geom.num_modes();
  const std::size_t p = geom.num_pixels();
  const double lambda_r = phys.wavelength * c.altitude;
  const double prefactor = phys.mu * phys.kappa * c.pixel_size * c.pixel_size / (c.altitude * c.altitude);

  MatrixStack stack(p, CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      const double vx = (geom.detector_positions[l].x - geom.detector_positions[k].x) / lambda_r;
      const double vy = (geom.detector_positions[l].y - geom.detector_positions[k].y) / lambda_r;
      const double eta = sincpi(vx * c.pixel_size) * sincpi(vy * c.pixel_size);
      for (std::size_t i = 0; i < p; ++i) {
        const double phase =
            2.0 * std::numbers::pi * (vx * geom.pixel_centers[i].x + vy * geom.pixel_centers[i].y);
        stack[i](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
            prefactor * eta * std::polar(1.0, phase);
      }
    }
  }
  return stack;
}

CMatrix combine(const MatrixStack& stack, const RVector& temps) {
  if (static_cast<std::size_t>(temps.size()) != stack.size()) {
    throw ConfigError("temperature vector has " + std::to_string(temps.size()) + " entries, model has " +
                      std::to_string(stack.size()) + " parameters");
  }
  if (stack.empty()) return CMatrix();
  CMatrix out = CMatrix::Zero(stack.front().rows(), stack.front().cols());
  for (std::size_t i = 0; i < stack.size(); ++i) {
    kernels::caxpy(temps[static_cast<Eigen::Index>(i)], stack[i].data(), out.data(),
                   static_cast<std::size_t>(out.size()));
  }
  return out;
}

CoherenceMatrix coherence_matrix(const Geometry& geom, const PhysicsConstants& phys,
                                 const TemperatureMap& temps) {
  CoherenceMatrix cm;
  cm.dgamma = coherence_derivatives(geom, phys);
  cm.gamma = combine(cm.dgamma, temps.temps());
  return cm;
}

}  // namespace qmet
