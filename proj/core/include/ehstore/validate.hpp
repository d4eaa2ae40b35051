#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ehstore {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Runs the cross-validation suite: special-function identities, unit-area
/// checks, integral-equation residuals, approximation error bounds,
/// asymptotic consistency, mutation probes, and (unless fast) seeded Monte
/// Carlo agreement with the closed forms.
ValidationReport run_validation(bool fast, std::uint64_t seed = 20260809);

std::string report_to_json(const ValidationReport& report);

}  // namespace ehstore
