#pragma once

// Plain-text outputs. Every number is printed with %.17g so files round-trip
// exactly and identical runs produce identical bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qmet/types.hpp"

namespace qmet::io {

std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
  std::string str() const;
};

// Complex matrix, one row per line as re,im pairs: re_0,im_0,re_1,im_1,...
std::string matrix_csv(const CMatrix& m);
CMatrix parse_matrix_csv(const std::string& text);

std::string unitary_json(const CMatrix& u);
CMatrix parse_unitary_json(const std::string& text);

// Reads .csv or .json by extension.
CMatrix read_unitary(const std::filesystem::path& path);

// Row-major grid of real values with `cols` per line.
std::string grid_csv(const RVector& values, int cols);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t x);

// Records the files a run produced and writes manifest.json next to them.
class RunManifest {
 public:
  RunManifest(std::filesystem::path out_dir, std::string command, std::string scenario, std::uint64_t seed);

  // Writes the file into out_dir and remembers its checksum.
  void emit(const std::string& name, const std::string& content);
  void note(const std::string& key, const std::string& value);
  void finish(double wall_seconds) const;

  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  struct Entry {
    std::string name;
    std::uint64_t checksum;
    std::size_t bytes;
  };
  std::filesystem::path out_dir_;
  std::string command_;
  std::string scenario_;
  std::uint64_t seed_;
  std::vector<Entry> outputs_;
  std::vector<std::pair<std::string, std::string>> notes_;
};

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace qmet::io
