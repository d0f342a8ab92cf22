#pragma once

// JSON scenario files:
//   { "R_m", "wavelength_m", "pixel_size_m", "px", "py", "nx", "ny",
//     "dx_max_m", "dy_max_m", "mu", "temperatures_K" }
// temperatures_K is a row-major p-vector or a scalar for a uniform scene.
// Optional: "name", "bandwidth_Hz".

#include <string>

#include "qmet/scene.hpp"

namespace qmet {

struct Scenario {
  std::string name;
  std::string source;  // file path or builtin:<name>
  GeometryConfig geometry;
  PhysicsConstants physics;
  TemperatureMap temps;

  Geometry build() const { return build_geometry(geometry); }
  CoherenceMatrix coherence() const;
};

Scenario parse_scenario(const std::string& json_text, const std::string& source = "<string>");

// Reads a file, or one of the builtin scenes: two-pixel, line-3, line-5,
// image-6x5. Throws ConfigError for anything else.
Scenario load_scenario(const std::string& path_or_name);
Scenario builtin_scenario(const std::string& name);

std::string scenario_to_json(const Scenario& s);

// 6 x 5 binary pattern of an h-bar glyph, 1 = hot; row-major, 6 rows of 5.
RVector hbar_pattern(double hot, double cold);

}  // namespace qmet
