#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "stratlabor/density.hpp"
#include "stratlabor/numerics.hpp"
#include "stratlabor/random.hpp"

using namespace stratlabor;

namespace {

double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

double poly_integral(const std::vector<double>& c, double a, double b) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double p = static_cast<double>(k + 1);
    s += c[k] * (std::pow(b, p) - std::pow(a, p)) / p;
  }
  return s;
}

double ks_statistic(std::vector<double> xs, const Density& d) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = d.cdf(xs[i]);
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - F)});
  }
  return ks;
}

}  // namespace

TEST_CASE("integrate: closed-form examples") {
  CHECK(integrate([](double x) { return 2.0 * x; }, Interval(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate([](double) { return 1.0; }, Interval(0.5, 1)) == doctest::Approx(0.5).epsilon(1e-12));
  const double y = 3.0;
  CHECK(std::abs(integrate([&](double x) { return (y + 1) * std::pow(x, y); }, Interval(0, 1)) - 1.0) < 1e-10);
}

TEST_CASE("integrate: polynomials up to degree 10 on sub-intervals of [0,1]") {
  RngStream rng(7, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int deg = trial % 11;
    std::vector<double> c(static_cast<std::size_t>(deg) + 1);
    for (auto& v : c) v = 2.0 * rng.uniform() - 1.0;
    double a = rng.uniform();
    double b = rng.uniform();
    if (a > b) std::swap(a, b);
    if (b - a < 1e-3) b = a + 1e-3;
    const double got = integrate([&](double x) { return poly_eval(c, x); }, Interval(a, b));
    CHECK(std::abs(got - poly_integral(c, a, b)) <= 1e-12);
  }
}

TEST_CASE("integrate: kinked integrand and error reporting") {
  const double got = integrate([](double x) { return std::abs(x - 0.37); }, Interval(0, 1));
  CHECK(std::abs(got - (0.37 * 0.37 + 0.63 * 0.63) / 2.0) < 1e-8);
  CHECK_THROWS_AS(integrate([](double x) { return 1.0 / (x - 0.5) / 0.0; }, Interval(0, 1)), DomainError);
  CHECK_THROWS_AS(integrate([](double x) { return std::sin(1.0 / (x + 1e-300)); }, Interval(0, 1),
                            Tolerances{}.with_quad_tol(1e-14)),
                  AccuracyError);
}

TEST_CASE("maximize_1d: examples") {
  const auto q = maximize_1d([](double x) { return -(x - 0.3) * (x - 0.3); }, Interval(0, 1), 64);
  CHECK(std::abs(q.arg - 0.3) < 1e-6);
  const auto e = maximize_1d([](double x) { return x; }, Interval(0, 1), 64);
  CHECK(e.arg == 1.0);
  const auto flat = maximize_1d([](double) { return 2.0; }, Interval(0, 1), 64);
  CHECK(flat.arg == 0.0);
  CHECK_THROWS(maximize_1d([](double x) { return x; }, Interval(0, 1), 8));
}

TEST_CASE("maximize_1d: argmax invariant under exp transform on random cubics") {
  RngStream rng(11, 3);
  for (int k = 0; k < 20; ++k) {
    const double c1 = 4 * rng.uniform() - 2, c2 = 4 * rng.uniform() - 2, c3 = 4 * rng.uniform() - 2;
    auto f = [&](double x) { return c1 * x + c2 * x * x + c3 * x * x * x; };
    const auto a = maximize_1d(f, Interval(0, 1), 64);
    const auto b = maximize_1d([&](double x) { return std::exp(f(x)); }, Interval(0, 1), 64);
    CHECK(std::abs(a.arg - b.arg) < 1e-6);
  }
}

TEST_CASE("find_roots_1d: examples and polynomial roots") {
  auto r1 = find_roots_1d([](double x) { return x - 0.5; }, Interval(0, 1), 64);
  REQUIRE(r1.size() == 1);
  CHECK(std::abs(r1[0] - 0.5) < 1e-12);
  auto r2 = find_roots_1d([](double x) { return (x - 0.25) * (x - 0.75); }, Interval(0, 1), 64);
  REQUIRE(r2.size() == 2);
  CHECK(std::abs(r2[0] - 0.25) < 1e-9);
  CHECK(std::abs(r2[1] - 0.75) < 1e-9);
  CHECK(find_roots_1d([](double) { return 1.0; }, Interval(0, 1), 64).empty());
  CHECK_THROWS(find_roots_1d([](double x) { return x; }, Interval(0, 1), 10));

  const std::vector<double> roots{0.113, 0.29, 0.5001, 0.77, 0.93};
  auto p = [&](double x) {
    double v = 1.0;
    for (double r : roots) v *= (x - r);
    return v;
  };
  auto got = find_roots_1d(p, Interval(0, 1), 256);
  REQUIRE(got.size() == roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) CHECK(std::abs(p(got[i])) <= 1e-8);
}

TEST_CASE("bisect_predicate finds monotone boundary") {
  const double b = bisect_predicate([](double x) { return x < 0.3141; }, 0.0, 1.0, 1e-12);
  CHECK(std::abs(b - 0.3141) < 1e-11);
}

TEST_CASE("sampling: determinism and moments") {
  const auto u = Density::uniform(0, 1);
  RngStream a(42, 0), b(42, 0), c(42, 1);
  const auto s1 = sample(u, 3, a);
  const auto s2 = sample(u, 3, b);
  const auto s3 = sample(u, 3, c);
  CHECK(s1 == s2);
  CHECK(s1 != s3);

  RngStream r(5, 9);
  const auto p = sample(Density::power(1.0), 100000, r);
  const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
  CHECK(std::abs(mean - 2.0 / 3.0) < 0.01);

  const auto g = sample(Density::gaussian(0, 1), 100000, r);
  const double gm = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  double var = 0.0;
  for (double x : g) var += (x - gm) * (x - gm);
  var /= static_cast<double>(g.size() - 1);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("sampling: KS statistic below 0.01 for every catalog density") {
  const std::vector<Density> catalog{Density::uniform(0, 1),     Density::uniform(-2, 3),
                                     Density::gaussian(0.3, 2.0), Density::gaussian(0, 1, 6),
                                     Density::power(0.0),         Density::power(1.0),
                                     Density::power(8.0),         Density::linear_ramp(0.1),
                                     Density::linear_ramp(-1.0),  Density::linear_ramp(2.0)};
  std::uint64_t id = 0;
  for (const auto& d : catalog) {
    RngStream rng(2024, id++);
    CAPTURE(d.describe());
    CHECK(ks_statistic(sample(d, 100000, rng), d) < 0.01);
  }
}

TEST_CASE("density catalog: normalization, quantile inverse, derivative") {
  const std::vector<Density> catalog{Density::uniform(-1, 2), Density::gaussian(1, 0.5), Density::power(2.5),
                                     Density::linear_ramp(1.0), Density::linear_ramp(-0.4)};
  for (const auto& d : catalog) {
    CAPTURE(d.describe());
    CHECK(std::abs(integrate([&](double x) { return d.pdf(x); }, d.support()) - 1.0) < 1e-7);
    for (double u : {0.01, 0.2, 0.5, 0.8, 0.99}) CHECK(std::abs(d.cdf(d.quantile(u)) - u) < 1e-10);
    const double x = d.quantile(0.37);
    const double h = 1e-5;
    const double fd = (d.pdf(x + h) - d.pdf(x - h)) / (2 * h);
    CHECK(std::abs(fd - d.pdf_derivative(x)) < 1e-5 * std::max(1.0, std::abs(fd)));
    const double m = integrate([&](double t) { return t * d.pdf(t); }, d.support());
    CHECK(std::abs(m - d.mean()) < 1e-7);
  }
  CHECK_THROWS_AS(Density::linear_ramp(3.0), DomainError);
  CHECK_THROWS_AS(Density::power(-1.5), DomainError);
}
