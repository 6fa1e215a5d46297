#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "stratlabor/coate_loury.hpp"
#include "stratlabor/continuous_market.hpp"
#include "stratlabor/random.hpp"

using namespace stratlabor;

namespace {

// Skill Unif[0,1], phi(x|y) = (y+1) x^y, u = a y - 1, flat wage, quadratic cost.
ContinuousMarket linear_flat(double a, double w, double c, double c_min = -1.0, double lambda = 1.0) {
  UtilitySpec u;
  u.a = a;
  u.b = -1.0;
  WageSpec wages;
  wages.w = w;
  CostSpec cost;
  cost.c_maj = c;
  cost.c_min = c_min > 0 ? c_min : c;
  return ContinuousMarket(Density::uniform(0, 1), SignalKernel::polynomial(), u, wages, cost, lambda);
}

// Skill N(0,1), phi = N(y,1), u = scale * y, Nash wages.
ContinuousMarket gaussian_nash(double scale, double alpha, double lambda, double c_maj, double c_min) {
  UtilitySpec u;
  u.a = scale;
  u.b = 0.0;
  u.alpha = alpha;
  WageSpec wages;
  wages.kind = WageSpec::Kind::nash;
  CostSpec cost;
  cost.c_maj = c_maj;
  cost.c_min = c_min;
  return ContinuousMarket(Density::gaussian(0, 1, 6), SignalKernel::gaussian(1.0), u, wages, cost, lambda);
}

// Independent oracle for the flat-wage polynomial market: the worker objective
// w (1 - theta^{y'+1}) - c/2 (y'-y)^2 is strictly concave, so Y+ solves
// w (-ln theta) theta^{y'+1} = c (y' - y), found here by plain bisection.
double foc_response(double theta, double y, double w, double c) {
  if (theta <= 0.0 || theta >= 1.0 || w == 0.0) return y;
  auto g = [&](double yn) { return -w * std::log(theta) * std::pow(theta, yn + 1.0) - c * (yn - y); };
  double lo = y, hi = y + 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Composite midpoint rule over Unif[0,1] skills.
double brute_utility(double theta, double a, double w, double c, int n = 2000) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = (i + 0.5) / n;
    const double yn = foc_response(theta, y, w, c);
    const double h = theta <= 0 ? 1.0 : (theta >= 1 ? 0.0 : 1.0 - std::pow(theta, yn + 1.0));
    s += h * (a * yn - 1.0);
  }
  return s / n;
}

}  // namespace

TEST_CASE("hire_prob: examples and pooling") {
  const auto m = linear_flat(2, 1, 5, 5, 0.7);
  CHECK(hire_prob(m, {0.0, 0.0}, 0.3).maj == 1.0);
  CHECK(std::abs(hire_prob(m, {0.5, 0.5}, 1.0).maj - 0.75) < 1e-15);
  const auto h = hire_prob(m, {0.2, 0.6}, 0.4);
  CHECK(std::abs(h.pooled - (0.7 * h.maj + 0.3 * h.min)) < 1e-15);
  const auto g = gaussian_nash(1, 1, 1, 20, 20);
  CHECK(std::abs(hire_prob(g, {0.37, 0.37}, 0.37).maj - 0.5) < 1e-15);
  CHECK(hire_prob(g, {g.signal_domain().lo, 0}, 2.0).maj == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("signal kernels: normalization and derivatives") {
  const std::vector<SignalKernel> kernels{SignalKernel::polynomial(), SignalKernel::gaussian(0.7)};
  for (const auto& k : kernels) {
    CAPTURE(k.describe());
    for (double y : {0.0, 0.3, 1.0, 1.7}) {
      const Interval xs = k.signal_domain(Interval(y - 1e-3, y + 1e-3));
      CHECK(std::abs(integrate([&](double x) { return k.pdf(x, y); }, xs) - 1.0) < 1e-5);
      const double h = 1e-5;
      for (double x : {0.2, 0.55, 0.9}) {
        const double fd = (std::log(k.pdf(x, y + h)) - std::log(k.pdf(x, y - h))) / (2 * h);
        CHECK(std::abs(fd - k.dlog_dy(x, y)) < 1e-6);
        const double fd2 = (k.dlog_dy(x, y + h) - k.dlog_dy(x, y - h)) / (2 * h);
        CHECK(std::abs(fd2 - k.d2log_dy2(x, y)) < 1e-5);
      }
      const double fds = (k.survival(0.4, y + h) - k.survival(0.4, y - h)) / (2 * h);
      CHECK(std::abs(fds - k.survival_dy(0.4, y)) < 1e-7);
    }
  }
}

TEST_CASE("incentive: flat and Nash wages") {
  CHECK(incentive(linear_flat(2, 0, 5), 0.3, 0.5) == 0.0);
  CHECK(std::abs(incentive(linear_flat(2, 1, 5), 0.5, 1.0) - 0.75) < 1e-15);

  // u(y) = y with unit variances: the wage is x/2 above the threshold.
  const auto g = gaussian_nash(1, 1, 1, 20, 20);
  RngStream rng(99, 1);
  for (double y : {-0.5, 0.0, 0.8}) {
    double mc = 0.0;
    constexpr int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double x = y + rng.normal();
      if (x >= 0.0) mc += 0.5 * x;
    }
    mc /= n;
    CAPTURE(y);
    CHECK(std::abs(incentive(g, 0.0, y) - mc) / mc < 1e-2);
  }
}

TEST_CASE("worker_best_response: limits, oracle and monotonicity") {
  CHECK(worker_best_response(linear_flat(2, 0, 5), Group::maj, 0.4, 0.3) == 0.3);
  CHECK(worker_best_response(linear_flat(2, 1, 1e12), Group::maj, 0.4, 0.3) == doctest::Approx(0.3).epsilon(1e-9));

  const auto m = linear_flat(2, 1, 5);
  // Dense-grid oracle of the worker objective.
  for (double theta : {0.2, 0.45, 0.8}) {
    for (double y : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      double best = -1e300, arg = y;
      for (int i = 0; i <= 10000; ++i) {
        const double yn = y + 2.0 * i / 10000;
        const double v = 1.0 - std::pow(theta, yn + 1.0) - 2.5 * (yn - y) * (yn - y);
        if (v > best) {
          best = v;
          arg = yn;
        }
      }
      CAPTURE(theta);
      CAPTURE(y);
      const double got = worker_best_response(m, Group::maj, theta, y);
      CHECK(std::abs(got - arg) < 1e-3);
      CHECK(std::abs(got - foc_response(theta, y, 1, 5)) < 1e-10);
    }
  }

  for (double theta : {0.1, 0.5, 0.9}) {
    double prev = -1.0;
    for (int i = 0; i <= 50; ++i) {
      const double y = i / 50.0;
      const double r = worker_best_response(m, Group::maj, theta, y);
      CHECK(r >= y);
      CHECK(r >= prev);
      prev = r;
    }
  }

  // Raising the cost scale shrinks every strictly positive improvement.
  const auto cheap = linear_flat(2, 1, 3);
  const auto dear = linear_flat(2, 1, 9);
  for (int i = 0; i <= 20; ++i) {
    const double y = i / 20.0;
    const double lo = worker_best_response(dear, Group::maj, 0.4, y) - y;
    const double hi = worker_best_response(cheap, Group::maj, 0.4, y) - y;
    CHECK(hi > 0.0);
    CHECK(lo < hi);
  }
}

TEST_CASE("employer utility: static limit, lambda, oracle") {
  const auto still = linear_flat(2, 0, 5);
  for (double t : {0.1, 0.5, 0.9}) {
    CHECK(std::abs(employer_perf_utility(still, {t, t}) - employer_static_utility(still, {t, t})) < 1e-12);
  }
  const auto m = linear_flat(2, 1, 5);
  CHECK(employer_perf_utility(m, {0.4, 0.1}) == employer_perf_utility(m, {0.4, 0.9}));
  for (double t : {0.2, 0.4, 0.7}) {
    CHECK(std::abs(employer_perf_utility(m, {t, t}) - brute_utility(t, 2, 1, 5)) < 1e-6);
  }
}

TEST_CASE("welfare and qualified proportion") {
  const auto still = linear_flat(2, 0, 5);
  CHECK(aggregate_worker_welfare(still, {0.4, 0.4}) == 0.0);
  const auto m = linear_flat(2, 1, 5);
  CHECK(std::abs(aggregate_worker_welfare(m, {1.0, 1.0})) < 1e-15);
  for (double t : {0.2, 0.5, 0.8}) {
    const double stay = integrate([&](double y) { return incentive(m, t, y); }, Interval(0, 1));
    CHECK(aggregate_worker_welfare(m, {t, t}) >= stay);

    // Qualified iff a Y+ > 1 (H > 0 whenever theta < 1).
    int n_q = 0;
    constexpr int n = 20000;
    for (int i = 0; i < n; ++i) {
      if (2.0 * foc_response(t, (i + 0.5) / n, 1, 5) > 1.0) ++n_q;
    }
    CHECK(std::abs(proportion_qualified(m, {t, t}) - static_cast<double>(n_q) / n) < 2.0 / n);
  }
  const auto big_a = linear_flat(1e6, 1, 5);
  CHECK(proportion_qualified(big_a, {0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("nash_wage: Gaussian closed form and zero profit") {
  const auto g = gaussian_nash(1, 1, 1, 20, 20);
  CHECK(std::abs(nash_wage(g, 0.0, 0.8) - 0.4) < 1e-6);
  CHECK(nash_wage(g, 0.5, 0.3) == 0.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double x = 0.1 * i;
    worst = std::max({worst, std::abs(nash_wage(g, 0.0, x) - 0.5 * x), std::abs(g.posterior_mean(x) - 0.5 * x)});
  }
  CHECK(worst < 1e-3);
  CHECK_THROWS_AS(nash_wage(g, 0.0, 60.0), UndefinedSignalError);

  for (double t : {-1.0, 0.0, 0.7}) CHECK(std::abs(zero_profit_residual(g, {t, t})) < 1e-3);
  CHECK(std::abs(zero_profit_residual(g, {g.policy_box().hi, g.policy_box().hi})) < 1e-6);
  const auto still = linear_flat(2, 0, 5);
  CHECK(zero_profit_residual(still, {0.3, 0.3}) == doctest::Approx(employer_static_utility(still, {0.3, 0.3})));
}

TEST_CASE("find_stable_continuous: static workers and the flat-wage market") {
  const auto still = linear_flat(2, 0, 5);
  const auto s0 = find_stable_continuous(still, {0.9, 0.9}, 1e-3);
  CHECK(s0.converged);
  CHECK(s0.iterations <= 2);
  const auto direct = maximize_1d([&](double t) { return employer_static_utility(still, {t, t}); }, Interval(0, 1));
  CHECK(std::abs(s0.pair.theta_maj - direct.arg) < 1e-5);

  const auto m = linear_flat(2, 1, 5);
  const auto s = find_stable_continuous(m, {0.5, 0.5}, 1e-3);
  REQUIRE(s.converged);
  const auto again = find_stable_continuous(m, s.pair, 1e-3, 1);
  CHECK(std::abs(again.pair.theta_maj - s.pair.theta_maj) < 1e-3);
  const auto opt = find_optimal_continuous(m, 64, {s.pair});
  CHECK(opt.value >= employer_perf_utility(m, s.pair));
  CHECK(opt.value > employer_perf_utility(m, s.pair) + 1e-3);
}

TEST_CASE("find_optimal_continuous: dense-grid oracle and separability") {
  const auto m = linear_flat(2, 1, 5);
  const auto opt = find_optimal_continuous(m);
  double best = -1e300;
  for (int i = 0; i <= 200; ++i) best = std::max(best, brute_utility(i / 200.0, 2, 1, 5));
  CHECK(opt.value >= best - 1e-6);
  CHECK(std::abs(opt.value - best) < 1e-4);
  CHECK(opt.pair.theta_min == opt.pair.theta_maj);

  const auto two = linear_flat(2, 1, 4, 8, 0.6);
  const auto joint = find_optimal_continuous(two);
  const auto maj = find_optimal_continuous(linear_flat(2, 1, 4));
  const auto min = find_optimal_continuous(linear_flat(2, 1, 8));
  CHECK(std::abs(joint.pair.theta_maj - maj.pair.theta_maj) < 1e-6);
  CHECK(std::abs(joint.pair.theta_min - min.pair.theta_maj) < 1e-6);
  CHECK(std::abs(joint.value - (0.6 * maj.value + 0.4 * min.value)) < 1e-9);
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) CHECK(joint.value >= employer_perf_utility(two, {i / 20.0, j / 20.0}) - 1e-12);
  }
}

TEST_CASE("threshold policies dominate randomized policies on an MLR market") {
  const auto m = linear_flat(2, 0, 5);
  const auto best_threshold =
      maximize_1d([&](double t) { return employer_static_utility(m, {t, t}); }, Interval(0, 1), 256);

  // 64-bin randomized policy; the utility is linear in the hire probabilities,
  // so coordinate ascent sets each bin to its best value in turn.
  constexpr int bins = 64;
  std::vector<double> coef(bins);
  for (int b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / bins, hi = static_cast<double>(b + 1) / bins;
    coef[b] = integrate(
        [&](double y) {
          return (2 * y - 1) * (m.kernel().survival(lo, y) - m.kernel().survival(hi, y));
        },
        Interval(0, 1));
  }
  std::vector<double> f(bins, 0.5);
  for (bool changed = true; changed;) {
    changed = false;
    for (int b = 0; b < bins; ++b) {
      const double v = coef[b] > 0 ? 1.0 : 0.0;
      if (v != f[b]) {
        f[b] = v;
        changed = true;
      }
    }
  }
  double rand_best = 0.0;
  for (int b = 0; b < bins; ++b) rand_best += f[b] * coef[b];
  CHECK(best_threshold.val >= rand_best - 1e-6);
}

TEST_CASE("binary-kernel market reduces to the Coate-Loury market") {
  // Skill Unif[0,0.5], skilled at y >= 0.5, hinge cost c: investing costs
  // c (0.5 - y) ~ Unif[0, c/2].
  UtilitySpec u;
  u.base = UtilitySpec::Base::sign_step;
  u.cutoff = 0.5;
  WageSpec wages;
  wages.w = 5.0;
  CostSpec cost;
  cost.kind = CostSpec::Kind::hinge;
  cost.c_maj = cost.c_min = 2.0;
  const ContinuousMarket cm(Density::uniform(0, 0.5),
                            SignalKernel::binary(0.5, Density::power(1), Density::uniform(0, 1)), u, wages, cost);
  const CoateLouryMarket cl{SignalModel(Density::power(1), Density::uniform(0, 1)),
                            CostModel(Density::uniform(0, 1)), MarketParams{5.0, 1.0, 1.0}};
  for (double t : {0.1, 0.3, 0.5, 0.6, 0.9}) {
    CAPTURE(t);
    CHECK(std::abs(employer_perf_utility(cm, {t, t}) - perf_utility(cl, t)) < 1e-7);
    CHECK(std::abs(proportion_qualified(cm, {t, t}) - aggregate_response(cl, t)) < 1e-9);
  }
}

TEST_CASE("two-group Nash market with power utility") {
  const auto m = gaussian_nash(15, 2, 0.8, 20, 25);
  const auto s = find_stable_continuous(m, {0.0, 0.0}, 1e-5);
  CHECK(s.converged);
  const auto ms = evaluate_policy(m, s.pair);
  CHECK(ms.gap >= 0.0);
  CHECK(ms.qualified_maj > ms.qualified_min);
  const auto opt = find_optimal_continuous(m, 64, {s.pair});
  CHECK(opt.value >= ms.utility);
}
