#pragma once

// Experiment runners behind the command-line tool: equilibrium reports (JSON),
// parameter sweeps and training runs (CSV).

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratlabor/scenario.hpp"

namespace stratlabor {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> grid_n;
  int threads = 1;
};

void apply_options(Scenario& s, const RunOptions& opt);

/// 9 significant digits; empty for NaN.
std::string format_sig9(double v);

/// Header plus rows. The first `key_columns` columns keep their order, the
/// rest are sorted by name.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> key_columns, std::vector<std::string> other_columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return rows_.size(); }
  /// Cells not named in `row` stay empty. Unknown names throw std::invalid_argument.
  void add(const std::map<std::string, std::string>& row);
  const std::string& cell(std::size_t row, const std::string& column) const;
  /// UTF-8, "\n" line endings, cells quoted only when they contain , " or newline.
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

struct PolicyEval {
  PolicyPair pair;
  double utility = 0.0;
  double welfare = 0.0;
  double welfare_maj = 0.0;
  double welfare_min = 0.0;
  double qualified = 0.0;
  double qualified_maj = 0.0;
  double qualified_min = 0.0;
  double gap = 0.0;
  double zero_profit = std::numeric_limits<double>::quiet_NaN();
};

/// Stable and optimal policies of a scenario, with the RRM runs behind them.
struct EquilibriumSolution {
  struct Run {
    PolicyPair start;
    std::vector<PolicyPair> path;
    bool converged = false;
    std::string error;
  };
  std::vector<Run> runs;
  std::vector<PolicyEval> stable;
  std::vector<PolicyEval> optimal;
  bool optimal_unique = true;
  std::string stable_error;
  std::string optimal_error;
};

EquilibriumSolution solve_equilibrium(const Scenario& s, int threads = 1);

/// Worker welfare in a threshold market: wage income minus the investment
/// cost of those who invest.
double threshold_worker_welfare(const CoateLouryMarket& m, double theta);

/// Report with trajectories, stable set, optimal set, metrics and theorem
/// diagnostics. `errors` lists numeric failures.
nlohmann::json run_equilibrium(const Scenario& s, const RunOptions& opt);

/// One row per value and policy (stable rows first). Failures go to the
/// `error` column and the sweep continues.
CsvTable run_sweep(const Config& cfg, const std::string& axis, const std::vector<double>& values,
                   const RunOptions& opt);

/// Per-round theta and threshold-policy employer utility for both training
/// modes: every trial plus mean and 5th/95th percentiles across trials.
CsvTable run_sgd(const Scenario& s, const RunOptions& opt);

/// Linear-interpolated empirical quantile, q in [0, 1].
double empirical_quantile(std::vector<double> v, double q);

}  // namespace stratlabor
