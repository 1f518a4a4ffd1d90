#pragma once

// Suite of independent checks on the library, with hooks that deliberately
// break the normalization or the gain quadrature so that the suite itself
// can be shown to catch such faults.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace topolab {

struct OracleOptions {
  /// Multiplies alpha_N in the normalization check.
  double alpha_scale = 1.0;
  /// Multiplies the gain quadrature weight in the coarea check.
  double quadrature_scale = 1.0;
  std::uint64_t seed = 1;
};

struct OracleResult {
  std::string name;
  bool passed = false;
  /// Measured quantity and the threshold it is compared with.
  double value = 0.0;
  double tolerance = 0.0;
};

std::vector<OracleResult> run_oracle_suite(const OracleOptions& options = {});

/// One "PASS|FAIL name value tolerance" line per result.
void print_oracle_results(std::ostream& out, const std::vector<OracleResult>& results);

}  // namespace topolab
