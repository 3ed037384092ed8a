#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "minet/gradcheck.hpp"

namespace minet {

struct SuiteEntry {
  std::string name;
  std::string group;  // "op" or "module"
  double tolerance = 1e-4;
  GradCheckReport report;

  bool passed() const { return report.passed(tolerance); }
};

/// Finite-difference checks for every autodiff op and the composite model
/// modules. `filter` selects entries whose name or group equals it; empty
/// runs everything. Throws ConfigError when the filter matches nothing.
std::vector<SuiteEntry> run_gradient_suite(std::string_view filter = {}, std::size_t coords_per_tensor = 20);

/// Names accepted by run_gradient_suite's filter.
std::vector<std::string> gradient_suite_names();

}  // namespace minet
