#pragma once

// Deterministic one-dimensional numerics: adaptive Gauss-Kronrod quadrature,
// grid-then-golden maximization, sign-scan root finding.
//
// Everything here is a pure function of its arguments. The templates take any
// callable `double(double)`; evaluation errors thrown by the callable propagate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stratlabor/errors.hpp"

namespace stratlabor {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      std::ostringstream os;
      os << "invalid interval [" << lo << ", " << hi << "]";
      throw DomainError(os.str());
    }
  }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  double clamp(double x) const { return std::clamp(x, lo, hi); }
  // i-th of n+1 equispaced points; the last one is exactly `hi`.
  double grid_point(int i, int n) const { return i == n ? hi : lo + width() * i / n; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct Tolerances {
  double quad_tol = 1e-8;         // absolute quadrature error target
  double opt_tol = 1e-6;          // argument tolerance of 1-D maximization
  double root_tol = 1e-8;         // residual tolerance of root finding
  double fixed_point_tol = 1e-3;  // per-iterate stopping distance of fixed-point loops

  void validate() const {
    if (!(quad_tol > 0) || !(opt_tol > 0) || !(root_tol > 0) || !(fixed_point_tol > 0)) {
      throw DomainError("tolerances must be strictly positive");
    }
  }

  Tolerances with_opt_tol(double v) const {
    Tolerances t = *this;
    t.opt_tol = v;
    return t;
  }
  Tolerances with_root_tol(double v) const {
    Tolerances t = *this;
    t.root_tol = v;
    return t;
  }
  Tolerances with_quad_tol(double v) const {
    Tolerances t = *this;
    t.quad_tol = v;
    return t;
  }

  friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

struct Extremum {
  double arg = 0.0;
  double val = 0.0;
};

namespace detail {

template <class F>
double checked_eval(F& f, double x) {
  const double y = f(x);
  if (!std::isfinite(y)) {
    std::ostringstream os;
    os << "function value is not finite at x=" << x;
    throw DomainError(os.str());
  }
  return y;
}

struct QuadBudget {
  long evals = 0;
  long max_evals = 2'000'000;
  double unresolved = 0.0;  // error estimate of leaves accepted at the depth limit
};

constexpr int kQuadMaxDepth = 40;

// 15-point Kronrod estimate on [a, b]; `err` receives |K15 - G7|. Boost
// reports the difference on the reference interval [-1, 1], so it is scaled
// by the half-width here.
template <class F>
double kronrod_leaf(F& f, double a, double b, double& err) {
  auto g = [&](double x) { return checked_eval(f, x); };
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, a, b, 0, 0.0, &err);
  err *= 0.5 * (b - a);
  return v;
}

template <class F>
double adaptive_recurse(F& f, double a, double b, double whole, double err, double tol, int depth,
                        QuadBudget& budget) {
  if (err <= tol || err <= 1e-14 * std::abs(whole)) return whole;
  const double m = 0.5 * (a + b);
  if (!(m > a && m < b)) return whole;  // interval at floating-point resolution
  if (depth >= kQuadMaxDepth) {
    budget.unresolved += err;
    return whole;
  }
  if ((budget.evals += 30) > budget.max_evals) {
    throw AccuracyError("quadrature evaluation budget exhausted", whole, err);
  }
  double el = 0.0;
  double er = 0.0;
  const double left = kronrod_leaf(f, a, m, el);
  const double right = kronrod_leaf(f, m, b, er);
  return adaptive_recurse(f, a, m, left, el, 0.5 * tol, depth + 1, budget) +
         adaptive_recurse(f, m, b, right, er, 0.5 * tol, depth + 1, budget);
}

}  // namespace detail

/// Adaptive quadrature of `f` over `domain` to absolute accuracy
/// `tol.quad_tol`: intervals are bisected until the Gauss-Kronrod (7/15)
/// error estimate of every leaf is below its share of the tolerance. The
/// domain is first cut into eight panels so narrow features are not missed.
///
/// Throws DomainError on a non-finite evaluation and AccuracyError (with the
/// best estimate) when leaves at the depth limit leave more than quad_tol of
/// unresolved error, or when the evaluation budget runs out.
template <class F>
double integrate(F&& f, Interval domain, const Tolerances& tol = {}) {
  constexpr int kPanels = 8;
  detail::QuadBudget budget;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double a = domain.grid_point(p, kPanels);
    const double b = domain.grid_point(p + 1, kPanels);
    double err = 0.0;
    const double whole = detail::kronrod_leaf(f, a, b, err);
    budget.evals += 15;
    total += detail::adaptive_recurse(f, a, b, whole, err, tol.quad_tol / kPanels, 0, budget);
  }
  if (budget.unresolved > tol.quad_tol) {
    std::ostringstream os;
    os << "quadrature did not reach tolerance " << tol.quad_tol << " (residual estimate "
       << budget.unresolved << ")";
    throw AccuracyError(os.str(), total, budget.unresolved);
  }
  return total;
}

/// Golden-section maximization inside [lo, hi] until the bracket is shorter
/// than `xtol`. Ties keep the left part of the bracket.
template <class F>
Extremum golden_maximize(F&& f, double lo, double hi, double xtol) {
  static const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = detail::checked_eval(f, c);
  double fd = detail::checked_eval(f, d);
  for (int it = 0; it < 200 && (b - a) > xtol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = detail::checked_eval(f, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = detail::checked_eval(f, d);
    }
  }
  return fc >= fd ? Extremum{c, fc} : Extremum{d, fd};
}

namespace detail {

template <class F>
std::vector<double> grid_values(F& f, Interval domain, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) v[static_cast<std::size_t>(i)] = checked_eval(f, domain.grid_point(i, n));
  return v;
}

// Refines grid point `i` with golden search over its neighbouring cells; keeps
// the grid value when refinement does not improve on it.
template <class F>
Extremum refine_grid_max(F& f, Interval domain, int n, int i, double gi, double xtol) {
  const double lo = domain.grid_point(std::max(i - 1, 0), n);
  const double hi = domain.grid_point(std::min(i + 1, n), n);
  Extremum best{domain.grid_point(i, n), gi};
  const Extremum g = golden_maximize(f, lo, hi, xtol);
  if (g.val > best.val) best = g;
  return best;
}

}  // namespace detail

/// Grid scan over grid_n+1 equispaced points followed by golden refinement in
/// the bracket around the best grid point. Endpoints are eligible; among
/// grid-equal maxima the smallest argument wins.
template <class F>
Extremum maximize_1d(F&& f, Interval domain, int grid_n = 64, const Tolerances& tol = {}) {
  if (grid_n < 16) throw std::invalid_argument("maximize_1d: grid_n must be >= 16");
  const auto v = detail::grid_values(f, domain, grid_n);
  const auto it = std::max_element(v.begin(), v.end());  // first maximum
  const int i = static_cast<int>(it - v.begin());
  return detail::refine_grid_max(f, domain, grid_n, i, *it, tol.opt_tol);
}

/// Every grid-local maximum (leftmost point of a plateau), each refined by
/// golden search. Sorted by argument.
template <class F>
std::vector<Extremum> local_maxima_1d(F&& f, Interval domain, int grid_n = 256, const Tolerances& tol = {}) {
  if (grid_n < 16) throw std::invalid_argument("local_maxima_1d: grid_n must be >= 16");
  const auto v = detail::grid_values(f, domain, grid_n);
  std::vector<Extremum> out;
  for (int i = 0; i <= grid_n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const bool left_ok = i == 0 || v[ui] > v[ui - 1];
    const bool right_ok = i == grid_n || v[ui] >= v[ui + 1];
    if (left_ok && right_ok) out.push_back(detail::refine_grid_max(f, domain, grid_n, i, v[ui], tol.opt_tol));
  }
  std::sort(out.begin(), out.end(), [](const Extremum& l, const Extremum& r) { return l.arg < r.arg; });
  return out;
}

/// Bisection on every grid cell where the sign of `f` changes, down to an
/// argument width of `xtol`. Returns the bracket midpoints (and exact grid
/// zeros), ascending. Continuity is not required: this also locates jumps.
template <class F>
std::vector<double> sign_changes_1d(F&& f, Interval domain, int grid_n, double xtol) {
  if (grid_n < 1) throw std::invalid_argument("sign_changes_1d: grid_n must be >= 1");
  const auto v = detail::grid_values(f, domain, grid_n);
  std::vector<double> out;
  for (int i = 0; i <= grid_n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (v[ui] == 0.0) {
      out.push_back(domain.grid_point(i, grid_n));
      continue;
    }
    if (i == grid_n || v[ui + 1] == 0.0 || (v[ui] > 0) == (v[ui + 1] > 0)) continue;
    double a = domain.grid_point(i, grid_n);
    double b = domain.grid_point(i + 1, grid_n);
    const bool a_pos = v[ui] > 0;
    for (int it = 0; it < 200 && (b - a) > xtol; ++it) {
      const double m = 0.5 * (a + b);
      if (!(m > a && m < b)) break;
      const double fm = detail::checked_eval(f, m);
      if (fm == 0.0) {
        a = b = m;
        break;
      }
      ((fm > 0) == a_pos ? a : b) = m;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

/// Roots of a continuous `f`: sign-change scan on grid_n+1 points, bisection
/// inside each bracket, then only points with |f(r)| <= tol.root_tol survive.
template <class F>
std::vector<double> find_roots_1d(F&& f, Interval domain, int grid_n = 256, const Tolerances& tol = {}) {
  if (grid_n < 64) throw std::invalid_argument("find_roots_1d: grid_n must be >= 64");
  const double xtol = 1e-15 * std::max(1.0, std::max(std::abs(domain.lo), std::abs(domain.hi)));
  std::vector<double> out;
  for (double r : sign_changes_1d(f, domain, grid_n, xtol)) {
    if (std::abs(detail::checked_eval(f, r)) <= tol.root_tol) out.push_back(r);
  }
  return out;
}

/// Bisection for a monotone predicate on [lo, hi]: returns the boundary point
/// b with pred(x) true for x < b and false beyond (up to `xtol`). Requires
/// pred(lo) == true.
template <class P>
double bisect_predicate(P&& pred, double lo, double hi, double xtol) {
  double a = lo;
  double b = hi;
  if (pred(b)) return b;
  for (int it = 0; it < 200 && (b - a) > xtol; ++it) {
    const double m = 0.5 * (a + b);
    if (!(m > a && m < b)) break;
    (pred(m) ? a : b) = m;
  }
  return a;
}

}  // namespace stratlabor
