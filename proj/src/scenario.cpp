#include "qmet/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qmet/errors.hpp"

namespace qmet {

namespace {

using nlohmann::json;

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("scenario is missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario field '") + key + "': " + e.what());
  }
}

Scenario line_scene(const std::string& name, int p, double mu) {
  Scenario s;
  s.name = name;
  s.source = "builtin:" + name;
  s.geometry = {758e3, 2.5e3, p, 1, p, 1, 10.0, 10.0};
  s.physics = PhysicsConstants::from_wavelength(0.21, mu);
  s.temps = TemperatureMap::uniform(static_cast<std::size_t>(p), 300.0);
  return s;
}

}  // namespace

CoherenceMatrix Scenario::coherence() const { return coherence_matrix(build(), physics, temps); }

RVector hbar_pattern(double hot, double cold) {
  static const int glyph[6][5] = {
      {0, 1, 0, 0, 0},
      {1, 1, 1, 0, 0},
      {0, 1, 0, 0, 0},
      {0, 1, 1, 1, 0},
      {0, 1, 0, 1, 0},
      {0, 1, 0, 1, 0},
  };
  RVector t(30);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 5; ++c) t[r * 5 + c] = glyph[r][c] ? hot : cold;
  return t;
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse scenario " + source + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario " + source + " must be a JSON object");

  Scenario s;
  s.source = source;
  s.name = j.value("name", std::string());
  GeometryConfig& g = s.geometry;
  g.altitude = required<double>(j, "R_m");
  g.pixel_size = required<double>(j, "pixel_size_m");
  g.px = required<int>(j, "px");
  g.py = required<int>(j, "py");
  g.nx = required<int>(j, "nx");
  g.ny = required<int>(j, "ny");
  g.dx_max = required<double>(j, "dx_max_m");
  g.dy_max = required<double>(j, "dy_max_m");
  build_geometry(g);

  s.physics = PhysicsConstants::from_wavelength(required<double>(j, "wavelength_m"), required<double>(j, "mu"),
                                                j.value("bandwidth_Hz", 0.0));

  const auto p = static_cast<std::size_t>(g.px * g.py);
  if (!j.contains("temperatures_K")) throw ConfigError("scenario is missing field 'temperatures_K'");
  const json& t = j.at("temperatures_K");
  if (t.is_number()) {
    s.temps = TemperatureMap::uniform(p, t.get<double>());
  } else if (t.is_array()) {
    if (t.size() != p) {
      throw ConfigError("temperatures_K has " + std::to_string(t.size()) + " entries, expected " + std::to_string(p));
    }
    RVector v(static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
      if (!t[i].is_number()) throw ConfigError("temperatures_K entries must be numbers");
      v[static_cast<Eigen::Index>(i)] = t[i].get<double>();
    }
    s.temps = TemperatureMap(v);
  } else {
    throw ConfigError("temperatures_K must be a number or an array");
  }
  return s;
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "two-pixel") {
    Scenario s;
    s.name = name;
    s.source = "builtin:" + name;
    s.geometry = {758e3, 4e3, 2, 1, 2, 1, 10.0, 10.0};
    s.physics = PhysicsConstants::from_wavelength(0.21, 0.5);
    s.temps = TemperatureMap::uniform(2, 300.0);
    return s;
  }
  if (name == "line-3") return line_scene(name, 3, 0.05);
  if (name == "line-5") return line_scene(name, 5, 0.05);
  if (name == "image-6x5") {
    Scenario s;
    s.name = name;
    s.source = "builtin:" + name;
    s.geometry = {758e3, 3e3, 5, 6, 5, 6, 10.0, 10.0};
    s.physics = PhysicsConstants::from_wavelength(0.21, 0.01);
    s.temps = TemperatureMap(hbar_pattern(353.0, 253.0));
    return s;
  }
  throw ConfigError("no scenario file or builtin scenario named '" + name + "'");
}

Scenario load_scenario(const std::string& path_or_name) {
  std::ifstream in(path_or_name);
  if (!in) return builtin_scenario(path_or_name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path_or_name);
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  if (!s.name.empty()) j["name"] = s.name;
  j["R_m"] = s.geometry.altitude;
  j["wavelength_m"] = s.physics.wavelength;
  j["pixel_size_m"] = s.geometry.pixel_size;
  j["px"] = s.geometry.px;
  j["py"] = s.geometry.py;
  j["nx"] = s.geometry.nx;
  j["ny"] = s.geometry.ny;
  j["dx_max_m"] = s.geometry.dx_max;
  j["dy_max_m"] = s.geometry.dy_max;
  j["mu"] = s.physics.mu;
  j["temperatures_K"] = std::vector<double>(s.temps.temps().data(), s.temps.temps().data() + s.temps.size());
  return j.dump(2);
}

}  // namespace qmet
