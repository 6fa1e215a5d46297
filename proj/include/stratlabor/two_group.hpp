#pragma once

// Two identifiable groups sharing one Coate-Loury market. Each group's skilled
// share depends only on its own threshold, so stable and optimal pairs are
// products of the single-group sets.

#include <vector>

#include "stratlabor/coate_loury.hpp"

namespace stratlabor {

struct TwoGroupMarket {
  CoateLouryMarket shared;
  double lambda_maj = 0.5;  // fraction of workers in the majority group

  void validate() const;
};

enum class Group { maj, min };

struct PolicyPair {
  double theta_maj = 1.0;
  double theta_min = 1.0;

  friend bool operator==(const PolicyPair&, const PolicyPair&) = default;
};

struct GroupShares {
  double pi_maj = 0.0;
  double pi_min = 0.0;
};

struct EquityReport {
  PolicyPair pair;
  double pi_maj = 0.0;
  double pi_min = 0.0;
  double gap = 0.0;
  double pooled_utility = 0.0;
  bool discriminatory = false;
};

GroupShares group_responses(const TwoGroupMarket& mkt, const PolicyPair& pair);

/// lambda U_perf(theta_maj) + (1 - lambda) U_perf(theta_min).
double pooled_utility(const TwoGroupMarket& mkt, const PolicyPair& pair);

EquityReport equity_report(const TwoGroupMarket& mkt, const PolicyPair& pair, double report_tol = 1e-4);

std::vector<PolicyPair> stable_pairs(const TwoGroupMarket& mkt, int grid_n = 256);
std::vector<PolicyPair> optimal_pairs(const TwoGroupMarket& mkt, int grid_n = 1024);

/// The pair with the largest gap among `pairs` (first one on ties).
EquityReport max_gap(const TwoGroupMarket& mkt, const std::vector<PolicyPair>& pairs);

}  // namespace stratlabor
