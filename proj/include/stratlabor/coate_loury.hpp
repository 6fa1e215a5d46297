#pragma once

// Single-group Coate-Loury hiring market with threshold policies.
//
// A worker becomes skilled when the cost of investment is below the wage
// premium w (TPR - FPR) of the deployed threshold, so the skilled share is
// pi(theta) = G(w (TPR(theta) - FPR(theta))). The employer earns p+ for every
// skilled hire and loses p- for every unskilled one.

#include <string>
#include <vector>

#include "stratlabor/density.hpp"
#include "stratlabor/numerics.hpp"

namespace stratlabor {

/// Signal densities phi(x|1) and phi(x|0) on [0, 1]. Construction checks that
/// both live on [0, 1] and that the likelihood ratio is nondecreasing on a
/// 512-point grid.
class SignalModel {
 public:
  SignalModel(Density skilled, Density unskilled);

  const Density& skilled() const noexcept { return skilled_; }
  const Density& unskilled() const noexcept { return unskilled_; }

  double tpr(double theta) const { return 1.0 - skilled_.cdf(theta); }
  double fpr(double theta) const { return 1.0 - unskilled_.cdf(theta); }
  double separation(double theta) const { return tpr(theta) - fpr(theta); }
  double likelihood_ratio(double x) const;

 private:
  Density skilled_;
  Density unskilled_;
};

/// Distribution of the worker's investment cost, supported on [0, M_G].
class CostModel {
 public:
  explicit CostModel(Density dist);

  const Density& distribution() const noexcept { return dist_; }
  double upper_bound() const noexcept { return dist_.support().hi; }
  double cdf(double c) const;  // 0 below 0, 1 at and above M_G
  double pdf(double c) const { return dist_.pdf(c); }
  double pdf_derivative(double c) const { return dist_.pdf_derivative(c); }
  double inverse_cdf(double p) const { return dist_.quantile(p); }

 private:
  Density dist_;
};

struct MarketParams {
  double wage = 1.0;         // w
  double reward_pos = 1.0;   // p+
  double penalty_neg = 1.0;  // p-

  void validate() const;
};

struct CoateLouryMarket {
  SignalModel signal;
  CostModel cost;
  MarketParams params;
  Tolerances tol{};
};

double tpr(const CoateLouryMarket& m, double theta);
double fpr(const CoateLouryMarket& m, double theta);

/// pi(theta) = G(max(0, w (TPR - FPR))).
double aggregate_response(const CoateLouryMarket& m, double theta);

/// p+ pi(theta_respond) TPR(theta_deploy) - p- (1 - pi(theta_respond)) FPR(theta_deploy).
double decoupled_utility(const CoateLouryMarket& m, double theta_deploy, double theta_respond);

/// Employer utility on the policy's own induced population.
double perf_utility(const CoateLouryMarket& m, double theta);

/// Non-performative utility against a fixed skilled share pi.
double vanilla_utility(const CoateLouryMarket& m, double theta, double pi);

/// theta*(pi): the employer's best threshold when the skilled share is pi.
double best_response(const CoateLouryMarket& m, double pi);

/// The share pi with theta*(pi) = theta. Where theta* is flat the largest such
/// pi is returned; thresholds skipped by a jump of theta* raise RangeError.
double best_response_inverse(const CoateLouryMarket& m, double theta);

struct RrmResult {
  std::vector<double> trajectory;  // starts with theta0
  bool converged = false;
};

/// theta_{t+1} = theta*(pi(theta_t)) until |theta_{t+1} - theta_t| < fixed_point_tol.
RrmResult rrm_run(const CoateLouryMarket& m, double theta0, int max_iters = 200);

/// |theta*(pi(theta)) - theta|.
double stable_residual(const CoateLouryMarket& m, double theta);

/// Stable thresholds: roots of theta*^{-1}(theta) - pi(theta), the boundary
/// point theta = 1 when nobody invests there, each verified as a fixed point.
std::vector<double> enumerate_stable(const CoateLouryMarket& m, int grid_n = 256);

struct OptimalResult {
  double theta = 1.0;
  double value = 0.0;
  std::vector<Extremum> optimal_set;  // distinct maximizers within the value band
  bool unique = true;
};

/// Global maximizer of perf_utility. Every local maximum of a grid_n scan is
/// refined; those within 1e-6 max(1, |best|) of the best form the optimal set.
OptimalResult find_optimal(const CoateLouryMarket& m, int grid_n = 1024);

enum class Verdict { holds, fails, not_evaluable };
std::string to_string(Verdict v);

struct TheoremCheck {
  Verdict verdict = Verdict::not_evaluable;
  std::string detail;
};

struct TheoremDiagnostics {
  int grid_n = 512;
  double delta1 = 0.0;      // max separation TPR - FPR
  double delta1_arg = 0.0;  // its argmax
  double delta2 = 0.0;      // min likelihood ratio
  double epsilon_sep = 1.0; // 1 - delta1
  double cost_upper = 0.0;  // M_G
  double lipschitz_c = 0.0; // sup |d theta*^{-1}/d theta| on [0, delta1_arg]
  double concavity_gamma = 0.0;
  double concavity_pi_max = 0.0;  // pi grid for gamma spans [0, G(w delta1)]
  double k1 = 0.0;
  double k2 = 0.0;
  double rrm_sensitivity = 0.0;   // w sup g sup |phi1 - phi0|
  double rrm_map_slope = 0.0;     // sup |tau'| for tau = theta* o pi
  double wage_window_lo = 0.0;
  double wage_window_hi = 0.0;
  bool differentiable = true;
  TheoremCheck thm_welfare_high_wage;
  TheoremCheck thm_welfare_low_wage;
  TheoremCheck thm_equity_high_wage;
  TheoremCheck thm_equity_low_wage;
  TheoremCheck rrm_contraction;
};

TheoremDiagnostics diagnose(const CoateLouryMarket& m, int grid_n = 512);

}  // namespace stratlabor
