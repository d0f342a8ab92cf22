#pragma once

// Fast oracle/property checks behind the `check` verb.

#include <cstdint>
#include <string>
#include <vector>

namespace qmet {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> run_self_checks(std::uint64_t seed);

}  // namespace qmet
