#include <cmath>
#include <vector>

#include "doctest.h"
#include "stratlabor/rc_sgd.hpp"

using namespace stratlabor;

namespace {

UtilitySpec linear_utility(double a) {
  UtilitySpec u;
  u.a = a;
  u.b = -1.0;
  return u;
}

ContinuousMarket hiring_market(double a = 2.0, double w = 1.0, double c = 5.0) {
  WageSpec wages;
  wages.w = w;
  CostSpec cost;
  cost.c_maj = cost.c_min = c;
  return ContinuousMarket(Density::uniform(0, 1), SignalKernel::polynomial(), linear_utility(a), wages, cost);
}

ContinuousMarket gaussian_market(double c = 4.0) {
  CostSpec cost;
  cost.c_maj = cost.c_min = c;
  return ContinuousMarket(Density::gaussian(0, 1, 6), SignalKernel::gaussian(1.0), linear_utility(1.0), WageSpec{},
                          cost);
}

// Response by brute force: dense grid over y' then golden refinement, with the
// expected score computed from a fine midpoint sum over the signal.
double brute_response(const SmoothPolicy& p, double y, double w, double c) {
  auto income = [&](double yn) {
    constexpr int n = 20000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) / n;
      s += p.f(x) * (yn + 1.0) * std::pow(x, yn);
    }
    return w * s / n;
  };
  auto obj = [&](double yn) { return income(yn) - 0.5 * c * (yn - y) * (yn - y); };
  double best = y, bv = obj(y);
  for (int i = 1; i <= 400; ++i) {
    const double yn = y + i * 1e-3;
    const double v = obj(yn);
    if (v > bv) {
      bv = v;
      best = yn;
    }
  }
  double lo = std::max(y, best - 1e-3), hi = best + 1e-3;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 60; ++i) {
    const double m1 = hi - r * (hi - lo), m2 = lo + r * (hi - lo);
    (obj(m1) < obj(m2) ? lo : hi) = (obj(m1) < obj(m2) ? m1 : m2);
  }
  return 0.5 * (lo + hi);
}

double central(const std::function<double(double)>& f, double x, double h) { return (f(x + h) - f(x - h)) / (2 * h); }

}  // namespace

TEST_CASE("smooth policy values and theta derivative") {
  const SmoothPolicy p{0.4, 0.02};
  CHECK(p.f(0.4) == doctest::Approx(0.5));
  CHECK(p.f(-1.0) > 0.0);
  CHECK(p.f(100.0) == doctest::Approx(1.0));
  for (double x : {0.1, 0.35, 0.4, 0.47, 0.9}) {
    auto ft = [&](double t) { return SmoothPolicy{t, 0.02}.f(x); };
    CHECK(p.dtheta(x) == doctest::Approx(central(ft, 0.4, 1e-6)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(SmoothPolicy({0.4, 0.0}).validate(), DomainError);
  // Converges to the threshold rule away from theta.
  const SmoothPolicy sharp{0.4, 1e-4};
  CHECK(sharp.f(0.39) < 1e-12);
  CHECK(sharp.f(0.41) > 1.0 - 1e-12);
}

TEST_CASE("loss partials match finite differences") {
  UtilitySpec power = linear_utility(3.0);
  power.alpha = 2.0;
  for (const LossSpec& l : {LossSpec::negative_utility(linear_utility(2.0)), LossSpec::negative_utility(power),
                            LossSpec::constant(1.5), LossSpec::prediction()}) {
    for (double f : {0.1, 0.5, 0.9}) {
      for (double y : {0.0, 0.3, 1.2}) {
        CHECK(l.d1(f, y) == doctest::Approx(central([&](double v) { return l.loss(v, y); }, f, 1e-5)).epsilon(1e-6));
        CHECK(l.d2(f, y) == doctest::Approx(central([&](double v) { return l.loss(f, v); }, y, 1e-5)).epsilon(1e-6));
      }
    }
  }
  CHECK(LossSpec::negative_utility(linear_utility(2.0)).loss(0.5, 1.0) == doctest::Approx(-0.5));
}

TEST_CASE("response model score integrals") {
  for (const ContinuousMarket& m : {hiring_market(), gaussian_market()}) {
    const ResponseModel rm(m);
    const SmoothPolicy p{m.kernel().kind() == KernelKind::gaussian ? 0.3 : 0.4, 0.02};
    for (double y : {0.1, 0.5, 0.9}) {
      auto s = [&](double v) { return rm.score_mean(p, v); };
      CHECK(rm.score_mean_dy(p, y) == doctest::Approx(central(s, y, 1e-4)).epsilon(1e-6));
      // The log-derivative expansion against direct quadrature of d2 phi / dy2.
      const double h = 1e-3;
      const SignalKernel& k = m.kernel();
      const Interval xs = k.signal_domain(Interval(y - 1e-2, y + 1e-2));
      const double direct = integrate(
          [&](double x) { return p.f(x) * (k.pdf(x, y + h) - 2 * k.pdf(x, y) + k.pdf(x, y - h)) / (h * h); }, xs,
          Tolerances{}.with_quad_tol(1e-7));
      CHECK(rm.score_mean_d2y(p, y) == doctest::Approx(direct).epsilon(1e-4));
      auto st = [&](double t) { return rm.score_mean(SmoothPolicy{t, 0.02}, y); };
      CHECK(rm.score_dtheta(p, y) == doctest::Approx(central(st, p.theta, 1e-5)).epsilon(1e-6));
      auto std_ = [&](double v) { return rm.score_dtheta(p, v); };
      CHECK(rm.score_dtheta_dy(p, y) == doctest::Approx(central(std_, y, 1e-4)).epsilon(1e-5));
    }
  }
}

TEST_CASE("worker response to a smooth policy") {
  const ContinuousMarket m = hiring_market();
  const ResponseModel rm(m);
  for (double theta : {0.2, 0.42, 0.7}) {
    const SmoothPolicy p{theta, 0.02};
    for (double y : {0.0, 0.5, 1.0}) {
      const double g = rm.response(p, y);
      CHECK(g > y);
      // First-order condition with the exact (untabulated) slope.
      CHECK(std::abs(rm.score_mean_dy(p, g) - 5.0 * (g - y)) < 1e-7);
    }
    CHECK(rm.response(p, 0.5) == doctest::Approx(brute_response(p, 0.5, 1.0, 5.0)).epsilon(1e-5));
  }
  const ResponseModel fixed = ResponseModel::static_workers(m);
  CHECK(fixed.response(SmoothPolicy{0.4}, 0.3) == 0.3);

  WageSpec nash;
  nash.kind = WageSpec::Kind::nash;
  CHECK_THROWS_AS(ResponseModel(ContinuousMarket(Density::uniform(0, 1), SignalKernel::polynomial(),
                                                 linear_utility(2), nash, CostSpec{})),
                  DomainError);
}

TEST_CASE("smooth response converges to the threshold response as the temperature falls") {
  const ContinuousMarket m = hiring_market();
  const ResponseModel rm(m);
  for (double theta : {0.3, 0.6}) {
    double err_wide = 0.0, err_sharp = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double y = 0.1 * i;
      const double hard = worker_best_response(m, Group::maj, theta, y);
      err_wide = std::max(err_wide, std::abs(rm.response(SmoothPolicy{theta, 0.05}, y) - hard));
      err_sharp = std::max(err_sharp, std::abs(rm.response(SmoothPolicy{theta, 0.01}, y) - hard));
    }
    CHECK(err_sharp < 2e-2);
    CHECK(err_sharp < err_wide);
  }
}

TEST_CASE("argmax gradient") {
  const ContinuousMarket m = hiring_market();
  const ResponseModel rm(m);
  SUBCASE("matches finite differences of the response") {
    for (double theta : {0.1, 0.3, 0.42, 0.6}) {
      const double h = 1e-4;
      const double fd =
          (rm.response(SmoothPolicy{theta + h}, 0.5) - rm.response(SmoothPolicy{theta - h}, 0.5)) / (2 * h);
      CHECK(std::abs(argmax_grad(rm, SmoothPolicy{theta}, 0.5) - fd) <= 0.02 * std::abs(fd));
      // Against the brute-force response as well.
      const double fd_brute = (brute_response(SmoothPolicy{theta + 1e-3}, 0.5, 1, 5) -
                               brute_response(SmoothPolicy{theta - 1e-3}, 0.5, 1, 5)) /
                              2e-3;
      CHECK(std::abs(argmax_grad(rm, SmoothPolicy{theta}, 0.5) - fd_brute) <= 0.02 * std::abs(fd_brute));
    }
  }
  SUBCASE("sampled version") {
    RngStream rng(3, 0);
    const double exact = argmax_grad(rm, SmoothPolicy{0.3}, 0.5);
    CHECK(argmax_grad(rm, SmoothPolicy{0.3}, 0.5, 200000, rng) == doctest::Approx(exact).epsilon(0.03));
  }
  SUBCASE("flat policy gives no response change") {
    CHECK(std::abs(argmax_grad(rm, SmoothPolicy{0.4, 1e4}, 0.5)) < 1e-6);
  }
  SUBCASE("expensive improvement gives no response change") {
    const ResponseModel dear(hiring_market(2, 1, 1e6));
    CHECK(std::abs(argmax_grad(dear, SmoothPolicy{0.4}, 0.5)) < 1e-5);
  }
  SUBCASE("static workers") { CHECK(argmax_grad(ResponseModel::static_workers(m), SmoothPolicy{0.4}, 0.5) == 0.0); }
}

TEST_CASE("loss by quadrature") {
  const ContinuousMarket m = hiring_market();
  const ResponseModel rm(m);
  CHECK(loss_quadrature(rm, SmoothPolicy{0.4}, LossSpec::constant(1.0)) == doctest::Approx(1.0).epsilon(1e-9));

  // Static workers and l = f: E_y E_{x|y} f(x) by a midpoint double sum.
  const SmoothPolicy p{0.4, 0.05};
  const double q = loss_quadrature(ResponseModel::static_workers(m), p, LossSpec::prediction());
  double brute = 0.0;
  constexpr int n = 1500;
  for (int i = 0; i < n; ++i) {
    const double y = (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double x = (j + 0.5) / n;
      brute += p.f(x) * (y + 1) * std::pow(x, y);
    }
  }
  CHECK(q == doctest::Approx(brute / (n * n)).epsilon(1e-5));

  // Negative of the employer's payoff: close to the threshold utility.
  const LossSpec l = LossSpec::negative_utility(m.utility());
  CHECK(-loss_quadrature(rm, SmoothPolicy{0.42, 0.005}, l) ==
        doctest::Approx(employer_perf_utility(m, PolicyPair{0.42, 0.42})).epsilon(1e-2));

  // Finite differences are stable across step sizes.
  for (double theta : {0.2, 0.6}) {
    auto L = [&](double t) { return loss_quadrature(rm, SmoothPolicy{t}, l); };
    CHECK(central(L, theta, 1e-4) == doctest::Approx(central(L, theta, 1e-3)).epsilon(1e-4));
  }
}

TEST_CASE("score-function gradient estimate") {
  const ContinuousMarket m = hiring_market();
  const ResponseModel rm(m);
  const LossSpec l = LossSpec::negative_utility(m.utility());
  RngStream draws(11, 0);
  const std::vector<double> ys = sample(m.skill(), 400, draws);

  SUBCASE("zero loss") {
    const GradientEstimate g = reinforce_grad(rm, SmoothPolicy{0.4}, LossSpec::constant(0.0), ys, 8, RngStream(1, 0));
    CHECK(g.g1 == 0.0);
    CHECK(g.g2 == 0.0);
    CHECK(g.g3 == 0.0);
  }
  SUBCASE("static workers reduce to the plain stochastic gradient") {
    const ResponseModel fixed = ResponseModel::static_workers(m);
    const SmoothPolicy p{0.4};
    const RngStream rng(5, 0);
    const GradientEstimate g = reinforce_grad(fixed, p, l, ys, 8, rng);
    CHECK(g.g2 == 0.0);
    CHECK(g.g3 == 0.0);
    double plain = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      RngStream r = rng.child(i);
      double s = 0.0;
      for (int j = 0; j < 8; ++j) {
        const double x = m.kernel().sample(ys[i], r);
        s += p.dtheta(x) * l.d1(p.f(x), ys[i]);
      }
      plain += s / 8;
    }
    CHECK(g.g1 == doctest::Approx(plain / ys.size()).epsilon(1e-12));
    CHECK(g.total == g.g1 + g.g2 + g.g3);
  }
  SUBCASE("score of the signal density has mean zero") {
    // The g3 integrand with l = 1 estimates d/dy' of a constant.
    const GradientEstimate g = reinforce_grad(rm, SmoothPolicy{0.4}, LossSpec::constant(1.0), ys, 16, RngStream(2, 0));
    CHECK(std::abs(g.g3) < 3 * g.std_error + 1e-12);
    CHECK(g.g1 == 0.0);
    CHECK(g.g2 == 0.0);
  }
  SUBCASE("agrees with the finite difference of the quadrature loss") {
    RngStream r(21, 0);
    const std::vector<double> big = stratified_sample(m.skill(), 10000, r);
    const double h = 1e-4;
    const double fd =
        (loss_quadrature(rm, SmoothPolicy{0.4 + h}, l) - loss_quadrature(rm, SmoothPolicy{0.4 - h}, l)) / (2 * h);
    const GradientEstimate g = reinforce_grad(rm, SmoothPolicy{0.4}, l, big, 256, RngStream(22, 0));
    CHECK(std::abs(g.total - fd) / (std::abs(fd) + 1e-6) < 0.05);
  }
  SUBCASE("thread count does not change the estimate") {
    const GradientEstimate a = reinforce_grad(rm, SmoothPolicy{0.3}, l, ys, 8, RngStream(4, 0), 1);
    const GradientEstimate b = reinforce_grad(rm, SmoothPolicy{0.3}, l, ys, 8, RngStream(4, 0), 4);
    CHECK(a.total == b.total);
    CHECK(a.std_error == b.std_error);
  }
  SUBCASE("bad input") {
    CHECK_THROWS_AS(reinforce_grad(rm, SmoothPolicy{0.3}, l, {}, 8, RngStream(4, 0)), DomainError);
    CHECK_THROWS_AS(reinforce_grad(rm, SmoothPolicy{0.3}, l, ys, 0, RngStream(4, 0)), DomainError);
  }
}

TEST_CASE("standard error shrinks as one over root n") {
  const ContinuousMarket m = hiring_market();
  const ResponseModel rm(m);
  const LossSpec l = LossSpec::negative_utility(m.utility());
  std::vector<double> lx, ly;
  for (int n : {100, 1000, 10000}) {
    RngStream draws(31, static_cast<std::uint64_t>(n));
    const GradientEstimate g = reinforce_grad(rm, SmoothPolicy{0.3}, l, sample(m.skill(), n, draws), 16,
                                              RngStream(32, static_cast<std::uint64_t>(n)));
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(g.std_error));
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  CHECK(sxy / sxx == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("training loop") {
  const ContinuousMarket m = hiring_market();
  const ResponseModel rm(m);
  const LossSpec l = LossSpec::negative_utility(m.utility());
  SgdConfig cfg;
  cfg.rounds = 4;
  cfg.n_outer = 20;
  cfg.n_inner = 4;
  cfg.seed = 9;

  SUBCASE("zero loss keeps theta") {
    const SgdTrajectory t = rsgd_run(rm, LossSpec::constant(0.0), cfg, SgdMode::performative);
    REQUIRE(t.theta.size() == 5);
    for (double th : t.theta) CHECK(th == cfg.theta0);
    CHECK(t.loss_estimate.size() == 4);
  }
  SUBCASE("deterministic given the seed, for any thread count") {
    const SgdTrajectory a = rsgd_run(rm, l, cfg, SgdMode::performative);
    SgdConfig threaded = cfg;
    threaded.threads = 3;
    const SgdTrajectory b = rsgd_run(rm, l, threaded, SgdMode::performative);
    CHECK(a.theta == b.theta);
    CHECK(a.loss_estimate == b.loss_estimate);
    SgdConfig other = cfg;
    other.seed = 10;
    CHECK(rsgd_run(rm, l, other, SgdMode::performative).theta != a.theta);
  }
  SUBCASE("iterates stay in the policy box") {
    SgdConfig big = cfg;
    big.eta0 = 50.0;
    for (SgdMode mode : {SgdMode::performative, SgdMode::naive}) {
      for (double th : rsgd_run(rm, l, big, mode).theta) CHECK(m.policy_box().contains(th));
    }
  }
  SUBCASE("no rounds") {
    SgdConfig none = cfg;
    none.rounds = 0;
    const SgdTrajectory t = rsgd_run(rm, l, none, SgdMode::naive);
    CHECK(t.theta.size() == 1);
    CHECK(t.loss_estimate.empty());
  }
  SUBCASE("invalid config") {
    SgdConfig bad = cfg;
    bad.eta0 = 0.0;
    CHECK_THROWS_AS(rsgd_run(rm, l, bad, SgdMode::naive), DomainError);
  }
}
