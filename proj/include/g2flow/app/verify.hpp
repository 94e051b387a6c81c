#pragma once

// Built-in verification suites: each invariant of the library as a named
// check with a measured value and a tolerance.

#include <functional>
#include <string>
#include <vector>

#include "g2flow/app/config.hpp"

namespace g2flow::app {

enum class Comparison { AtMost, AtLeast };

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::AtMost;
  double elapsed_s = 0.0;
  std::string error;  // exception text when the check threw
};

struct Report {
  std::vector<CheckResult> checks;

  bool all_pass() const;
  Json to_json(bool timing = true) const;
  std::string to_table(bool timing = true) const;
};

struct Check {
  std::string suite;
  std::string name;
  double tolerance;
  Comparison comparison;
  /// Returns the measured value. `fault` is 0 in normal runs; a nonzero
  /// value perturbs a constant inside the check (mutation testing).
  std::function<double(double fault)> run;
};

const std::vector<Check>& all_checks();
std::vector<std::string> suite_names();  // includes "all"

/// Throws ConfigError for an unknown suite or an unknown fault target.
Report run_suite(const std::string& suite, const std::string& inject_fault = "");

}  // namespace g2flow::app
