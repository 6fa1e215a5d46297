#pragma once

// Acceptance suite: each criterion runs a scenario, computes its own oracle
// where one is needed, and reports named checks against fixed bounds.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace stratlabor {

struct Check {
  std::string name;
  double measured = 0.0;
  std::string comparison;  // "<", "<=", ">", ">="
  double bound = 0.0;
  bool passed = false;
};

struct CriterionResult {
  std::string id;
  std::string description;
  std::vector<Check> checks;
  std::string detail;
  std::string error;  // exception text when the criterion could not finish
  double runtime_limit_seconds = 0.0;
  double elapsed_seconds = 0.0;  // not part of the summary
  bool passed = false;
};

struct VerifyOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> quad_tol;  // overrides every market's quadrature tolerance
  int threads = 1;
  std::vector<std::string> only;  // criterion ids; empty runs all
};

std::vector<std::string> criterion_ids();

/// Runs the selected criteria in order; `on_result` sees each result as it
/// completes. Unknown ids in `only` throw ConfigError("only").
std::vector<CriterionResult> run_acceptance(const VerifyOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// One line: PASS/FAIL, id, checks and elapsed time.
std::string format_result_line(const CriterionResult& r);

/// Deterministic summary (no timings), keys sorted.
nlohmann::json acceptance_summary(const std::vector<CriterionResult>& results, const VerifyOptions& opt);

}  // namespace stratlabor
