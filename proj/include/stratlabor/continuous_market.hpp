#pragma once

// Continuous-skill labor market with two groups.
//
// Workers of group i with base skill y ~ p(y) pick a new skill
//   Y+(y) = argmax_{y' >= y} incentive_i(y') - c_i(y', y),
// the employer hires on a signal x ~ phi(x|Y+) with a threshold theta_i and
// receives gamma(H) u(Y+). Wages are either flat or the Nash wage
// gamma(f_i(x)) E[u(y) | x].

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "stratlabor/density.hpp"
#include "stratlabor/numerics.hpp"
#include "stratlabor/random.hpp"
#include "stratlabor/two_group.hpp"

namespace stratlabor {

enum class KernelKind { polynomial, gaussian, binary };

/// Conditional signal density phi(x|y).
///   polynomial        (y+1) x^y on [0, 1], y > -1
///   gaussian(sd)      N(y, sd^2)
///   binary(t, s, u)   density s when y >= t, density u otherwise
class SignalKernel {
 public:
  static SignalKernel polynomial();
  static SignalKernel gaussian(double sd);
  static SignalKernel binary(double cutoff, Density skilled, Density unskilled);

  KernelKind kind() const noexcept { return kind_; }
  double sd() const noexcept { return sd_; }
  double cutoff() const noexcept { return cutoff_; }
  const std::optional<Density>& skilled() const noexcept { return skilled_; }
  const std::optional<Density>& unskilled() const noexcept { return unskilled_; }

  double pdf(double x, double y) const;
  /// P(X >= theta | y).
  double survival(double theta, double y) const;
  /// d/dy P(X >= theta | y); zero for the binary kernel away from its cutoff.
  double survival_dy(double theta, double y) const;
  double dlog_dy(double x, double y) const;
  double d2log_dy2(double x, double y) const;
  double sample(double y, RngStream& rng) const;

  /// Signals reachable from skills in `skills`: [0, 1] for bounded kernels,
  /// the skill range widened by 8 sd for the gaussian kernel.
  Interval signal_domain(const Interval& skills) const;
  /// Skill levels where phi(.|y) jumps.
  std::vector<double> breakpoints() const;
  bool smooth_in_skill() const noexcept { return kind_ != KernelKind::binary; }
  std::string describe() const;

  friend bool operator==(const SignalKernel&, const SignalKernel&) = default;

 private:
  KernelKind kind_ = KernelKind::polynomial;
  double sd_ = 0.0;
  double cutoff_ = 0.0;
  std::optional<Density> skilled_;
  std::optional<Density> unskilled_;
};

/// u(y, h) = gamma(h) u(y) with u linear (a y + b) or a sign step at `cutoff`
/// (+1 at and above, -1 below) and gamma(h) = h^alpha.
struct UtilitySpec {
  enum class Base { linear, sign_step };
  Base base = Base::linear;
  double a = 1.0;
  double b = -1.0;
  double cutoff = 0.5;
  double alpha = 1.0;

  double base_value(double y) const { return base == Base::linear ? a * y + b : (y >= cutoff ? 1.0 : -1.0); }
  double production(double h) const;
  double value(double y, double h) const { return production(h) * base_value(y); }
  bool separable() const noexcept { return alpha == 1.0; }
  void validate() const;
};

struct WageSpec {
  enum class Kind { flat, nash };
  Kind kind = Kind::flat;
  double w = 1.0;  // flat wage

  void validate() const;
};

/// quadratic: c_i/2 (y' - y)^2; hinge: c_i (y' - y)+.
struct CostSpec {
  enum class Kind { quadratic, hinge };
  Kind kind = Kind::quadratic;
  double c_maj = 1.0;
  double c_min = 1.0;

  double scale(Group g) const { return g == Group::maj ? c_maj : c_min; }
  double cost(Group g, double y_new, double y) const;
  double d_cost(Group g, double y_new, double y) const;   // d/dy'
  double d2_cost(Group g, double y_new, double y) const;  // d^2/dy'^2
  void validate() const;
};

class IncentiveCache;

/// Hermite interpolant on an equispaced grid: cubic from values and slopes,
/// quintic when second derivatives are supplied. Clamps outside its domain.
class HermiteTable {
 public:
  HermiteTable(Interval domain, std::vector<double> values, std::vector<double> slopes,
               std::vector<double> curvatures = {});
  double operator()(double y) const;
  double prime(double y) const;
  const Interval& domain() const noexcept { return domain_; }

 private:
  Interval domain_;
  std::vector<double> v_;
  std::vector<double> d_;
  std::vector<double> c_;
};

class ContinuousMarket {
 public:
  ContinuousMarket(Density skill, SignalKernel kernel, UtilitySpec utility, WageSpec wages, CostSpec cost,
                   double lambda_maj = 1.0, std::optional<Interval> policy_box = std::nullopt,
                   Tolerances tol = {});

  const Density& skill() const noexcept { return skill_; }
  const SignalKernel& kernel() const noexcept { return kernel_; }
  const UtilitySpec& utility() const noexcept { return utility_; }
  const WageSpec& wages() const noexcept { return wages_; }
  const CostSpec& cost() const noexcept { return cost_; }
  double lambda_maj() const noexcept { return lambda_; }
  const Interval& policy_box() const noexcept { return box_; }
  const Tolerances& tol() const noexcept { return tol_; }
  const Interval& signal_domain() const noexcept { return signals_; }

  double weight(Group g) const { return g == Group::maj ? lambda_ : 1.0 - lambda_; }
  bool single_group() const noexcept { return lambda_ == 1.0; }
  /// Largest improvement worth considering from any skill level.
  double reach(Group g) const;

  /// Posterior mean of u(y) given the signal x, from the pre-computed table.
  double posterior_mean(double x) const;
  /// Wage income w(x, theta) integrated against phi(.|y') as a cubic
  /// Hermite interpolant in y' (cached per group threshold).
  std::shared_ptr<const HermiteTable> incentive_curve(double theta) const;

 private:
  Density skill_;
  SignalKernel kernel_;
  UtilitySpec utility_;
  WageSpec wages_;
  CostSpec cost_;
  double lambda_;
  Interval box_;
  Tolerances tol_;
  Interval signals_;
  std::shared_ptr<const HermiteTable> posterior_;
  std::shared_ptr<IncentiveCache> cache_;
};

struct HireProbs {
  double maj = 0.0;
  double min = 0.0;
  double pooled = 0.0;
};

HireProbs hire_prob(const ContinuousMarket& m, const PolicyPair& pair, double y);

/// Expected wage income of a worker with skill y under threshold theta.
double incentive(const ContinuousMarket& m, double theta, double y);
/// d/dy of incentive; zero for kernels that jump in y.
double incentive_slope(const ContinuousMarket& m, double theta, double y);

double worker_best_response(const ContinuousMarket& m, Group g, double theta, double y);

/// argmax over y' in [y, y + reach] of income(y') - c_g(y', y): 64-point scan
/// plus the given jump points, golden refinement, then bisection on the
/// first-order condition when `slope` (d income / dy') is provided. Ties go
/// to the smallest y'.
double maximize_worker_objective(const std::function<double(double)>& income,
                                 const std::function<double(double)>& slope, const CostSpec& cost, Group g,
                                 double y, double reach, const std::vector<double>& jumps = {});

/// gamma(f(x)) times the posterior mean of u(y) given x; zero below theta.
/// Throws UndefinedSignalError where the marginal signal density vanishes.
double nash_wage(const ContinuousMarket& m, double theta, double x);

/// Hire probability entering the production term for a group-g worker at
/// skill y: own-group for separable utility, pooled otherwise.
double production_hire_prob(const ContinuousMarket& m, Group g, const PolicyPair& pair, double y);

double employer_perf_utility(const ContinuousMarket& m, const PolicyPair& pair);
/// E over p(y) of u(y, H(y)) with workers held at their base skill.
double employer_static_utility(const ContinuousMarket& m, const PolicyPair& pair);

double group_welfare(const ContinuousMarket& m, Group g, double theta);
double aggregate_worker_welfare(const ContinuousMarket& m, const PolicyPair& pair);

double group_qualified(const ContinuousMarket& m, Group g, const PolicyPair& pair);
double proportion_qualified(const ContinuousMarket& m, const PolicyPair& pair);

double zero_profit_residual(const ContinuousMarket& m, const PolicyPair& pair);

struct ContinuousStable {
  PolicyPair pair;
  bool converged = false;
  int iterations = 0;
  std::vector<PolicyPair> trajectory;  // starts with pair0
};

/// Repeated best response with worker responses frozen between rounds.
ContinuousStable find_stable_continuous(const ContinuousMarket& m, PolicyPair pair0, double tol,
                                        int max_iters = 200);

struct ContinuousOptimum {
  PolicyPair pair;
  double value = 0.0;
};

ContinuousOptimum find_optimal_continuous(const ContinuousMarket& m, int grid_n = 64,
                                          const std::vector<PolicyPair>& candidates = {});

struct PolicyMetrics {
  double utility = 0.0;
  double welfare = 0.0;
  double welfare_maj = 0.0;
  double welfare_min = 0.0;
  double qualified = 0.0;
  double qualified_maj = 0.0;
  double qualified_min = 0.0;
  double gap = 0.0;  // |qualified_maj - qualified_min|
  double zero_profit = 0.0;
};

PolicyMetrics evaluate_policy(const ContinuousMarket& m, const PolicyPair& pair);

}  // namespace stratlabor
