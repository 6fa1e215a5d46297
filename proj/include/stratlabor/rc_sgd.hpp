#pragma once

// Stochastic gradient descent against strategically responding workers.
//
// The employer deploys a logistic hiring score f_theta(x); a worker with base
// skill y moves to G_theta(y) = argmax_{y'} w E[f_theta(X) | y'] - c(y', y).
// The performative loss L(theta) = E_y E_{x ~ phi(.|G_theta(y))} l(f_theta(x), G_theta(y))
// has gradient g1 + g2 + g3: the direct policy term, the term through the
// loss's outcome argument, and the term through the signal density. The last
// two need d G_theta / d theta, obtained from the worker's first-order
// condition by the implicit function theorem.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "stratlabor/continuous_market.hpp"
#include "stratlabor/random.hpp"

namespace stratlabor {

/// f(x) = logistic((x - theta) / temperature).
struct SmoothPolicy {
  double theta = 0.0;
  double temperature = 0.02;

  double f(double x) const;
  /// d f / d theta = -f (1 - f) / temperature.
  double dtheta(double x) const;
  void validate() const;
};

/// Loss l(prediction, outcome) with its two partial derivatives.
struct LossSpec {
  std::function<double(double, double)> loss;
  std::function<double(double, double)> d1;
  std::function<double(double, double)> d2;

  /// -u(y) * prediction: minus the employer's payoff from a hire.
  static LossSpec negative_utility(const UtilitySpec& u);
  static LossSpec constant(double c);
  /// l = prediction.
  static LossSpec prediction();
};

class ScoreIncomeCache;

/// Worker response to a smooth policy in a flat-wage market.
class ResponseModel {
 public:
  explicit ResponseModel(ContinuousMarket market, Group g = Group::maj);
  /// Workers that never move: G_theta(y) = y.
  static ResponseModel static_workers(ContinuousMarket market, Group g = Group::maj);

  const ContinuousMarket& market() const noexcept { return market_; }
  Group group() const noexcept { return group_; }
  bool is_static() const noexcept { return static_; }

  /// E[f(X) | y'] integrated over the signal, and its first two y'-derivatives.
  double score_mean(const SmoothPolicy& p, double y) const;
  double score_mean_dy(const SmoothPolicy& p, double y) const;
  double score_mean_d2y(const SmoothPolicy& p, double y) const;
  /// E[d f / d theta (X) | y'] and its y'-derivative.
  double score_dtheta(const SmoothPolicy& p, double y) const;
  double score_dtheta_dy(const SmoothPolicy& p, double y) const;

  /// E[l(f(X), y') | y'] by quadrature over the signal.
  double expected_loss(const SmoothPolicy& p, const LossSpec& loss, double y) const;

  /// w E[f(X) | y'] as a quintic Hermite table in y' (cached per policy).
  std::shared_ptr<const HermiteTable> income_curve(const SmoothPolicy& p) const;

  double response(const SmoothPolicy& p, double y) const;
  /// True when the response sits on the edge of the worker's feasible set,
  /// where it is locally constant in theta.
  bool at_boundary(double y, double response) const;

 private:
  template <class F>
  double signal_integral(const SmoothPolicy& p, double y, F&& g) const;

  ContinuousMarket market_;
  Group group_;
  bool static_ = false;
  std::shared_ptr<ScoreIncomeCache> cache_;
};

/// d G_theta(y) / d theta = -A / B with
///   A = w E[d f / d theta (X) * dlog phi(X|G)]
///   B = w E[f(X) (d2log phi + (dlog phi)^2)] - c''(G)
/// at G = G_theta(y), both by quadrature. Zero for static workers and for
/// boundary responses. Throws DegenerateResponseError when |B| <= 1e-8.
double argmax_grad(const ResponseModel& model, const SmoothPolicy& p, double y);
/// Same with A and B estimated from n_inner draws X ~ phi(.|G).
double argmax_grad(const ResponseModel& model, const SmoothPolicy& p, double y, int n_inner, RngStream& rng);

struct GradientEstimate {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
  double total = 0.0;
  int n_outer = 0;  // samples used
  int n_inner = 0;
  int dropped = 0;  // degenerate samples left out
  double std_error = 0.0;  // of total, across outer samples
  double loss = 0.0;       // mean sampled loss
};

/// Score-function estimate of the three gradient parts, averaged over the
/// batch. Sample i draws its signals from rng.child(i).
GradientEstimate reinforce_grad(const ResponseModel& model, const SmoothPolicy& p, const LossSpec& loss,
                                const std::vector<double>& y_batch, int n_inner, const RngStream& rng,
                                int threads = 1);

/// L(theta) by nested quadrature: skill outside, signal inside.
double loss_quadrature(const ResponseModel& model, const SmoothPolicy& p, const LossSpec& loss);

struct SgdConfig {
  double eta0 = 0.1;
  int n_outer = 100;
  int n_inner = 16;
  int rounds = 20;
  double theta0 = 0.1;
  double temperature = 0.02;
  int population = 1000;  // skills drawn once per run; 0 draws afresh each round
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int threads = 1;

  void validate() const;
};

enum class SgdMode { performative, naive };

struct SgdTrajectory {
  std::vector<double> theta;          // rounds + 1 entries, starting at theta0
  std::vector<double> loss_estimate;  // one per round
  std::vector<int> dropped;           // degenerate samples per round
};

/// theta <- clamp(theta - eta0 / (t + 1) * sum_i grad_i). The performative
/// mode uses g1 + g2 + g3, the naive mode only g1.
SgdTrajectory rsgd_run(const ResponseModel& model, const LossSpec& loss, const SgdConfig& cfg, SgdMode mode);

}  // namespace stratlabor
