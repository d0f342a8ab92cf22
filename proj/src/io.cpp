#include "qmet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qmet/errors.hpp"

namespace qmet::io {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvTable::add(std::vector<double> row) {
  if (!header.empty() && row.size() != header.size()) throw ConfigError("CSV row width does not match header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  if (!header.empty()) out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_double(r[i]);
    }
    out += '\n';
  }
  return out;
}

std::string matrix_csv(const CMatrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c).real());
      out += ',';
      out += format_double(m(r, c).imag());
    }
    out += '\n';
  }
  return out;
}

CMatrix parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ConfigError("matrix CSV has a non-numeric cell: '" + cell + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ConfigError("matrix CSV is empty");
  const auto width = rows[0].size();
  if (width % 2 != 0) throw ConfigError("matrix CSV rows must hold re,im pairs");
  CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width / 2));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) throw ConfigError("matrix CSV rows have different widths");
    for (std::size_t c = 0; c < width / 2; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = Complex(rows[r][2 * c], rows[r][2 * c + 1]);
  }
  return m;
}

std::string unitary_json(const CMatrix& u) {
  nlohmann::json j;
  j["rows"] = u.rows();
  j["cols"] = u.cols();
  auto re = nlohmann::json::array();
  auto im = nlohmann::json::array();
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    auto rr = nlohmann::json::array();
    auto ri = nlohmann::json::array();
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      rr.push_back(u(r, c).real());
      ri.push_back(u(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  j["re"] = re;
  j["im"] = im;
  return j.dump(1) + "\n";
}

CMatrix parse_unitary_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto re = j.at("re").get<std::vector<std::vector<double>>>();
    const auto im = j.at("im").get<std::vector<std::vector<double>>>();
    if (re.empty() || re.size() != im.size()) throw ConfigError("unitary JSON re/im shapes differ");
    CMatrix m(static_cast<Eigen::Index>(re.size()), static_cast<Eigen::Index>(re[0].size()));
    for (std::size_t r = 0; r < re.size(); ++r) {
      if (re[r].size() != re[0].size() || im[r].size() != re[0].size())
        throw ConfigError("unitary JSON rows have different widths");
      for (std::size_t c = 0; c < re[r].size(); ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = Complex(re[r][c], im[r][c]);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cannot parse unitary JSON: ") + e.what());
  }
}

CMatrix read_unitary(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".json") return parse_unitary_json(text);
  return parse_matrix_csv(text);
}

std::string grid_csv(const RVector& values, int cols) {
  if (cols < 1 || values.size() % cols != 0) throw ConfigError("grid width does not divide the value count");
  std::string out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out += format_double(values[i]);
    out += ((i + 1) % cols == 0) ? '\n' : ',';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  if (!out) throw ConfigError("write failed for " + path.string());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

RunManifest::RunManifest(std::filesystem::path out_dir, std::string command, std::string scenario,
                         std::uint64_t seed)
    : out_dir_(std::move(out_dir)), command_(std::move(command)), scenario_(std::move(scenario)), seed_(seed) {
  std::filesystem::create_directories(out_dir_);
}

void RunManifest::emit(const std::string& name, const std::string& content) {
  write_file(out_dir_ / name, content);
  outputs_.push_back({name, fnv1a64(content), content.size()});
}

void RunManifest::note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }

void RunManifest::finish(double wall_seconds) const {
  nlohmann::ordered_json j;
  j["tool"] = "qmet";
  j["version"] = kToolVersion;
  j["command"] = command_;
  j["scenario"] = scenario_;
  j["seed"] = seed_;
  j["out_dir"] = out_dir_.string();
  j["wall_clock_s"] = wall_seconds;
  auto outs = nlohmann::ordered_json::array();
  for (const auto& e : outputs_) {
    nlohmann::ordered_json o;
    o["file"] = e.name;
    o["bytes"] = e.bytes;
    o["fnv1a64"] = hex64(e.checksum);
    outs.push_back(o);
  }
  j["outputs"] = outs;
  for (const auto& [k, v] : notes_) j["notes"][k] = v;
  write_file(out_dir_ / "manifest.json", j.dump(2) + "\n");
}

}  // namespace qmet::io
