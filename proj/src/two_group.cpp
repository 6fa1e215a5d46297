#include "stratlabor/two_group.hpp"

#include <cmath>

namespace stratlabor {

void TwoGroupMarket::validate() const {
  if (!(lambda_maj > 0.0 && lambda_maj < 1.0)) throw DomainError("lambda must lie in (0, 1)");
  shared.params.validate();
}

GroupShares group_responses(const TwoGroupMarket& mkt, const PolicyPair& pair) {
  return {aggregate_response(mkt.shared, pair.theta_maj), aggregate_response(mkt.shared, pair.theta_min)};
}

double pooled_utility(const TwoGroupMarket& mkt, const PolicyPair& pair) {
  const double l = mkt.lambda_maj;
  double u = 0.0;
  if (l > 0.0) u += l * perf_utility(mkt.shared, pair.theta_maj);
  if (l < 1.0) u += (1.0 - l) * perf_utility(mkt.shared, pair.theta_min);
  return u;
}

EquityReport equity_report(const TwoGroupMarket& mkt, const PolicyPair& pair, double report_tol) {
  const auto s = group_responses(mkt, pair);
  EquityReport r;
  r.pair = pair;
  r.pi_maj = s.pi_maj;
  r.pi_min = s.pi_min;
  r.gap = std::abs(s.pi_maj - s.pi_min);
  r.pooled_utility = pooled_utility(mkt, pair);
  r.discriminatory = r.gap > report_tol;
  return r;
}

namespace {

std::vector<PolicyPair> square(const std::vector<double>& v) {
  std::vector<PolicyPair> out;
  out.reserve(v.size() * v.size());
  for (double a : v)
    for (double b : v) out.push_back({a, b});
  return out;
}

}  // namespace

std::vector<PolicyPair> stable_pairs(const TwoGroupMarket& mkt, int grid_n) {
  return square(enumerate_stable(mkt.shared, grid_n));
}

std::vector<PolicyPair> optimal_pairs(const TwoGroupMarket& mkt, int grid_n) {
  std::vector<double> args;
  for (const auto& e : find_optimal(mkt.shared, grid_n).optimal_set) args.push_back(e.arg);
  return square(args);
}

EquityReport max_gap(const TwoGroupMarket& mkt, const std::vector<PolicyPair>& pairs) {
  if (pairs.empty()) throw DomainError("max_gap: no pairs");
  EquityReport best = equity_report(mkt, pairs.front());
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    auto r = equity_report(mkt, pairs[i]);
    if (r.gap > best.gap) best = r;
  }
  return best;
}

}  // namespace stratlabor
