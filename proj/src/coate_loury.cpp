#include "stratlabor/coate_loury.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stratlabor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMlrGrid = 512;
constexpr double kBestResponseXtol = 1e-12;
constexpr double kStableRootTol = 1e-6;
constexpr double kStableResidualMax = 5e-3;
constexpr double kStationarityTol = 1e-3;

bool on_unit_interval(const Density& d) { return d.support() == Interval(0.0, 1.0); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

SignalModel::SignalModel(Density skilled, Density unskilled)
    : skilled_(std::move(skilled)), unskilled_(std::move(unskilled)) {
  if (!on_unit_interval(skilled_) || !on_unit_interval(unskilled_)) {
    throw DomainError("signal densities must be supported on [0, 1]");
  }
  double prev = -kInf;
  for (int i = 1; i < kMlrGrid; ++i) {
    const double x = static_cast<double>(i) / kMlrGrid;
    const double r = likelihood_ratio(x);
    if (r < prev - 1e-9 * std::max(1.0, std::abs(prev))) {
      throw DomainError("likelihood ratio phi(x|1)/phi(x|0) decreases near x=" + fmt(x));
    }
    prev = r;
  }
}

double SignalModel::likelihood_ratio(double x) const {
  const double num = skilled_.pdf(x);
  const double den = unskilled_.pdf(x);
  if (den <= 0.0) return num > 0.0 ? kInf : 1.0;
  return num / den;
}

CostModel::CostModel(Density dist) : dist_(std::move(dist)) {
  if (dist_.support().lo != 0.0) throw DomainError("cost distribution must start at 0");
}

double CostModel::cdf(double c) const {
  if (c <= 0.0) return 0.0;
  if (c >= upper_bound()) return 1.0;
  return dist_.cdf(c);
}

void MarketParams::validate() const {
  if (!(wage >= 0.0)) throw DomainError("wage must be >= 0");
  if (!(reward_pos > 0.0)) throw DomainError("reward_pos must be > 0");
  if (!(penalty_neg >= 0.0)) throw DomainError("penalty_neg must be >= 0");
}

double tpr(const CoateLouryMarket& m, double theta) { return m.signal.tpr(theta); }
double fpr(const CoateLouryMarket& m, double theta) { return m.signal.fpr(theta); }

double aggregate_response(const CoateLouryMarket& m, double theta) {
  return m.cost.cdf(std::max(0.0, m.params.wage * m.signal.separation(theta)));
}

double vanilla_utility(const CoateLouryMarket& m, double theta, double pi) {
  return m.params.reward_pos * pi * m.signal.tpr(theta) -
         m.params.penalty_neg * (1.0 - pi) * m.signal.fpr(theta);
}

double decoupled_utility(const CoateLouryMarket& m, double theta_deploy, double theta_respond) {
  return vanilla_utility(m, theta_deploy, aggregate_response(m, theta_respond));
}

double perf_utility(const CoateLouryMarket& m, double theta) { return decoupled_utility(m, theta, theta); }

double best_response(const CoateLouryMarket& m, double pi) {
  if (!(pi >= 0.0 && pi <= 1.0)) throw DomainError("best_response: pi must lie in [0, 1]");
  if (pi == 0.0) return 1.0;
  if (pi == 1.0) return 0.0;
  auto u = [&](double t) { return vanilla_utility(m, t, pi); };
  return maximize_1d(u, Interval(0.0, 1.0), 256, m.tol.with_opt_tol(kBestResponseXtol)).arg;
}

double best_response_inverse(const CoateLouryMarket& m, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("best_response_inverse: theta must lie in [0, 1]");
  // theta* is nonincreasing, so {pi : theta*(pi) >= theta} is an interval [0, b].
  auto reaches = [&](double pi) { return best_response(m, pi) >= theta; };
  const double b = bisect_predicate(reaches, 0.0, 1.0, 1e-13);
  const double left = best_response(m, b);
  const double right = best_response(m, std::min(1.0, b + 1e-12));
  if (std::min(std::abs(left - theta), std::abs(right - theta)) > 1e-6) {
    std::ostringstream os;
    os << "theta=" << theta << " is not attained by the best response (it jumps from " << left << " to "
       << right << " at pi=" << b << ")";
    throw RangeError(os.str(), best_response(m, 1.0), best_response(m, 0.0));
  }
  return b;
}

RrmResult rrm_run(const CoateLouryMarket& m, double theta0, int max_iters) {
  if (!(theta0 >= 0.0 && theta0 <= 1.0)) throw DomainError("rrm_run: theta0 must lie in [0, 1]");
  if (max_iters < 1) throw DomainError("rrm_run: max_iters must be >= 1");
  RrmResult r;
  r.trajectory.push_back(theta0);
  double theta = theta0;
  for (int it = 0; it < max_iters; ++it) {
    const double next = best_response(m, aggregate_response(m, theta));
    r.trajectory.push_back(next);
    if (std::abs(next - theta) < m.tol.fixed_point_tol) {
      r.converged = true;
      break;
    }
    theta = next;
  }
  return r;
}

double stable_residual(const CoateLouryMarket& m, double theta) {
  return std::abs(best_response(m, aggregate_response(m, theta)) - theta);
}

namespace {

bool stationarity_holds(const CoateLouryMarket& m, double theta) {
  if (theta <= 0.0 || theta >= 1.0) return true;
  const double pi = aggregate_response(m, theta);
  const double lr = m.signal.likelihood_ratio(theta);
  if (pi <= 0.0) return false;
  const double lhs = m.params.penalty_neg * (1.0 - pi) / (m.params.reward_pos * pi);
  return std::abs(lhs - lr) <= kStationarityTol * std::max(1.0, std::abs(lr));
}

}  // namespace

std::vector<double> enumerate_stable(const CoateLouryMarket& m, int grid_n) {
  if (grid_n < 64) throw DomainError("enumerate_stable: grid_n must be >= 64");
  const Interval unit(0.0, 1.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto z = [&](double t) {
    try {
      return best_response_inverse(m, t) - aggregate_response(m, t);
    } catch (const RangeError&) {
      return nan;
    }
  };
  std::vector<double> zv(static_cast<std::size_t>(grid_n) + 1);
  for (int i = 0; i <= grid_n; ++i) zv[static_cast<std::size_t>(i)] = z(unit.grid_point(i, grid_n));

  std::vector<double> candidates;
  for (int i = 0; i < grid_n; ++i) {
    const double za = zv[static_cast<std::size_t>(i)];
    const double zb = zv[static_cast<std::size_t>(i) + 1];
    if (std::isnan(za) || std::isnan(zb)) continue;
    if (za == 0.0) {
      candidates.push_back(unit.grid_point(i, grid_n));
      continue;
    }
    if ((za > 0) == (zb > 0) || zb == 0.0) continue;
    double a = unit.grid_point(i, grid_n);
    double b = unit.grid_point(i + 1, grid_n);
    bool broken = false;
    for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
      const double mid = 0.5 * (a + b);
      const double zm = z(mid);
      if (std::isnan(zm)) {
        broken = true;
        break;
      }
      if (zm == 0.0) {
        a = b = mid;
        break;
      }
      ((zm > 0) == (za > 0) ? a : b) = mid;
    }
    if (broken) continue;
    const double r = 0.5 * (a + b);
    if (std::abs(z(r)) <= kStableRootTol) candidates.push_back(r);
  }
  if (zv.back() == 0.0) candidates.push_back(1.0);

  // Boundary thresholds are stable when the best response to their own
  // population returns them.
  for (double edge : {0.0, 1.0}) {
    if (stable_residual(m, edge) == 0.0) candidates.push_back(edge);
  }

  std::sort(candidates.begin(), candidates.end());
  std::vector<double> out;
  for (double c : candidates) {
    if (!out.empty() && std::abs(c - out.back()) < 1e-6) continue;
    if (stable_residual(m, c) >= kStableResidualMax) continue;
    if (!stationarity_holds(m, c)) continue;
    out.push_back(c);
  }
  return out;
}

OptimalResult find_optimal(const CoateLouryMarket& m, int grid_n) {
  if (grid_n < 256) throw DomainError("find_optimal: grid_n must be >= 256");
  auto u = [&](double t) { return perf_utility(m, t); };
  auto maxima = local_maxima_1d(u, Interval(0.0, 1.0), grid_n, m.tol.with_opt_tol(1e-10));
  OptimalResult r;
  auto best = std::max_element(maxima.begin(), maxima.end(),
                               [](const Extremum& a, const Extremum& b) { return a.val < b.val; });
  r.theta = best->arg;
  r.value = best->val;
  const double band = 1e-6 * std::max(1.0, std::abs(r.value));
  for (const auto& e : maxima) {
    if (e.val < r.value - band) continue;
    if (!r.optimal_set.empty() && std::abs(e.arg - r.optimal_set.back().arg) < 1e-4) continue;
    r.optimal_set.push_back(e);
  }
  r.unique = r.optimal_set.size() == 1;
  return r;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds:
      return "holds";
    case Verdict::fails:
      return "fails";
    case Verdict::not_evaluable:
      return "not_evaluable";
  }
  return "unknown";
}

namespace {

TheoremCheck verdict(bool ok, std::string detail) {
  return {ok ? Verdict::holds : Verdict::fails, std::move(detail)};
}

}  // namespace

TheoremDiagnostics diagnose(const CoateLouryMarket& m, int grid_n) {
  if (grid_n < 64) throw DomainError("diagnose: grid_n must be >= 64");
  const Interval unit(0.0, 1.0);
  const auto& sig = m.signal;
  const auto& p = m.params;
  TheoremDiagnostics d;
  d.grid_n = grid_n;
  d.cost_upper = m.cost.upper_bound();

  d.delta1 = -kInf;
  d.delta2 = kInf;
  double sup_phi = 0.0;
  double sup_dphi = 0.0;
  double sup_gap = 0.0;
  for (int i = 0; i <= grid_n; ++i) {
    const double x = unit.grid_point(i, grid_n);
    const double s = sig.separation(x);
    if (s > d.delta1) {
      d.delta1 = s;
      d.delta1_arg = x;
    }
    d.delta2 = std::min(d.delta2, sig.likelihood_ratio(x));
    const double f1 = sig.skilled().pdf(x);
    const double f0 = sig.unskilled().pdf(x);
    sup_phi = std::max({sup_phi, f1, f0});
    sup_gap = std::max(sup_gap, std::abs(f1 - f0));
    sup_dphi = std::max({sup_dphi, std::abs(sig.skilled().pdf_derivative(x)),
                         std::abs(sig.unskilled().pdf_derivative(x))});
  }
  d.epsilon_sep = 1.0 - d.delta1;

  double sup_g = 0.0;
  double sup_dg = 0.0;
  const Interval cost_dom(0.0, d.cost_upper);
  for (int i = 0; i <= grid_n; ++i) {
    const double c = cost_dom.grid_point(i, grid_n);
    sup_g = std::max(sup_g, m.cost.pdf(c));
    sup_dg = std::max(sup_dg, std::abs(m.cost.pdf_derivative(c)));
  }
  d.k1 = std::max(sup_g, sup_phi);
  d.k2 = std::max(sup_dg, sup_dphi);
  d.differentiable = std::isfinite(d.k2);
  d.rrm_sensitivity = p.wage * sup_g * sup_gap;

  // Lipschitz constant of theta*^{-1}(theta) = p- phi0 / (p+ phi1 + p- phi0) on [0, theta~].
  d.lipschitz_c = 0.0;
  if (d.differentiable && d.delta1_arg > 0.0) {
    const Interval left(0.0, d.delta1_arg);
    for (int i = 0; i <= grid_n; ++i) {
      const double x = left.grid_point(i, grid_n);
      const double f1 = sig.skilled().pdf(x), f0 = sig.unskilled().pdf(x);
      const double g1 = sig.skilled().pdf_derivative(x), g0 = sig.unskilled().pdf_derivative(x);
      const double den = p.reward_pos * f1 + p.penalty_neg * f0;
      if (den <= 0.0) {
        d.lipschitz_c = kInf;
        break;
      }
      const double slope = p.reward_pos * p.penalty_neg * (g0 * f1 - f0 * g1) / (den * den);
      d.lipschitz_c = std::max(d.lipschitz_c, std::abs(slope));
    }
  }

  // Strong-concavity modulus of theta -> U(theta, pi) from second differences,
  // minimized over the skilled shares the market can reach.
  d.concavity_pi_max = m.cost.cdf(std::max(0.0, p.wage * d.delta1));
  d.concavity_gamma = kInf;
  {
    constexpr int kPiGrid = 32;
    const double h = 1.0 / grid_n;
    for (int j = 0; j <= kPiGrid; ++j) {
      const double pi = d.concavity_pi_max * j / kPiGrid;
      for (int i = 1; i < grid_n; ++i) {
        const double x = unit.grid_point(i, grid_n);
        const double second = (vanilla_utility(m, x + h, pi) - 2.0 * vanilla_utility(m, x, pi) +
                               vanilla_utility(m, x - h, pi)) / (h * h);
        d.concavity_gamma = std::min(d.concavity_gamma, -second);
      }
    }
  }

  // Slope of the RRM map tau = theta* o pi by central differences on a coarser grid.
  {
    const int n = std::min(grid_n, 128);
    std::vector<double> tau(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) tau[static_cast<std::size_t>(i)] = best_response(m, aggregate_response(m, unit.grid_point(i, n)));
    d.rrm_map_slope = 0.0;
    for (int i = 0; i < n; ++i) {
      d.rrm_map_slope = std::max(d.rrm_map_slope, std::abs(tau[static_cast<std::size_t>(i) + 1] - tau[static_cast<std::size_t>(i)]) * n);
    }
  }

  const double w = p.wage, pp = p.reward_pos, pm = p.penalty_neg, d1 = d.delta1, d2 = d.delta2;
  const double mg = d.cost_upper;

  {
    std::ostringstream os;
    os << "delta2=" << fmt(d2) << " > 0; w=" << fmt(w) << " > M_G/delta1=" << fmt(mg / d1) << "; p+=" << fmt(pp)
       << " > p-/(delta1 delta2)=" << fmt(d2 > 0 ? pm / (d1 * d2) : kInf);
    d.thm_welfare_high_wage = verdict(d1 > 0 && d2 > 0 && w > mg / d1 && pp > pm / (d1 * d2), os.str());
  }
  {
    const double pit = aggregate_response(m, d.delta1_arg);
    const double odds = pit < 1.0 ? pit / (1.0 - pit) * pm : kInf;
    std::ostringstream os;
    os << "w=" << fmt(w) << " > 0; p+=" << fmt(pp) << " > max(1, pi/(1-pi) p-)=" << fmt(std::max(1.0, odds))
       << "; delta1 delta2=" << fmt(d1 * d2) << " > p-=" << fmt(pm);
    d.thm_welfare_low_wage = verdict(d1 > 0 && d2 > 0 && w > 0 && pp > std::max(1.0, odds) && d1 * d2 > pm, os.str());
  }
  {
    std::ostringstream os;
    os << "p+=p-: " << (pp == pm ? "yes" : "no") << "; w=" << fmt(w) << " > M_G/(1-eps)=" << fmt(mg / d1)
       << "; c=" << fmt(d.lipschitz_c) << " on [0," << fmt(d.delta1_arg) << "]";
    if (!d.differentiable || !std::isfinite(d.lipschitz_c)) {
      d.thm_equity_high_wage = {Verdict::not_evaluable, os.str() + " (Lipschitz constant unavailable)"};
    } else {
      d.thm_equity_high_wage = verdict(d1 > 0 && pp == pm && w > mg / d1, os.str());
    }
  }
  {
    const double t = d.delta1_arg;
    const double f1 = sig.skilled().pdf(t), f0 = sig.unskilled().pdf(t);
    const double target = (f1 + f0) > 0 && d1 > 0 ? f0 / ((1.0 - d.epsilon_sep) * (f1 + f0)) : kInf;
    d.wage_window_lo = target < 1.0 ? m.cost.inverse_cdf(std::max(0.0, target)) : kInf;
    d.wage_window_hi = d.k1 > 0 && d.k2 > 0 ? d.concavity_gamma / (2.0 * d.k1 * d.k2) : kInf;
    std::ostringstream os;
    os << "p+=p-: " << (pp == pm ? "yes" : "no") << "; gamma=" << fmt(d.concavity_gamma) << " > 0; "
       << fmt(d.wage_window_lo) << " < w=" << fmt(w) << " < gamma/(2 K1 K2)=" << fmt(d.wage_window_hi);
    if (!d.differentiable) {
      d.thm_equity_low_wage = {Verdict::not_evaluable, os.str() + " (unbounded density derivative)"};
    } else {
      d.thm_equity_low_wage = verdict(pp == pm && d.concavity_gamma > 0 && d.wage_window_lo < w &&
                                          w < d.wage_window_hi,
                                      os.str());
    }
  }
  {
    std::ostringstream os;
    os << "sup|tau'|=" << fmt(d.rrm_map_slope) << " < 1; sensitivity bound w sup g sup|phi1-phi0|="
       << fmt(d.rrm_sensitivity);
    d.rrm_contraction = verdict(d.rrm_map_slope < 1.0, os.str());
  }
  return d;
}

}  // namespace stratlabor
