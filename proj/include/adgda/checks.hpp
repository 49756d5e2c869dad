#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adgda {

// Property suites run by `adgda check`: one per module plus the harness.
struct CheckResult {
  std::string suite;
  std::vector<std::string> failures;
  double seconds = 0.0;

  bool passed() const { return failures.empty(); }
};

const std::vector<std::string>& check_suite_names();

// Throws std::invalid_argument for an unknown suite name.
CheckResult run_check_suite(const std::string& name);

// Runs the named suites (all when empty), printing one line per suite with
// its timing and every failure. Returns true when all pass.
bool run_checks(std::ostream& out, const std::vector<std::string>& only = {});

}  // namespace adgda
