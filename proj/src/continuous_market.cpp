#include "stratlabor/continuous_market.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace stratlabor {

// ---------------------------------------------------------------- kernel

SignalKernel SignalKernel::polynomial() { return SignalKernel{}; }

SignalKernel SignalKernel::gaussian(double sd) {
  if (!(sd > 0)) throw DomainError("gaussian kernel needs sd > 0");
  SignalKernel k;
  k.kind_ = KernelKind::gaussian;
  k.sd_ = sd;
  return k;
}

SignalKernel SignalKernel::binary(double cutoff, Density skilled, Density unskilled) {
  if (!(skilled.support() == Interval(0, 1)) || !(unskilled.support() == Interval(0, 1))) {
    throw DomainError("binary kernel densities must live on [0, 1]");
  }
  SignalKernel k;
  k.kind_ = KernelKind::binary;
  k.cutoff_ = cutoff;
  k.skilled_ = std::move(skilled);
  k.unskilled_ = std::move(unskilled);
  return k;
}

namespace {

void check_poly_skill(double y) {
  if (!(y > -1.0)) throw DomainError("polynomial kernel needs skill > -1");
}

}  // namespace

double SignalKernel::pdf(double x, double y) const {
  switch (kind_) {
    case KernelKind::polynomial:
      check_poly_skill(y);
      if (x < 0.0 || x > 1.0) return 0.0;
      return (y + 1.0) * std::pow(x, y);
    case KernelKind::gaussian:
      return standard_normal_pdf((x - y) / sd_) / sd_;
    case KernelKind::binary:
      return (y >= cutoff_ ? *skilled_ : *unskilled_).pdf(x);
  }
  return 0.0;
}

double SignalKernel::survival(double theta, double y) const {
  switch (kind_) {
    case KernelKind::polynomial:
      check_poly_skill(y);
      if (theta <= 0.0) return 1.0;
      if (theta >= 1.0) return 0.0;
      return -std::expm1((y + 1.0) * std::log(theta));
    case KernelKind::gaussian:
      return standard_normal_cdf((y - theta) / sd_);
    case KernelKind::binary:
      return 1.0 - (y >= cutoff_ ? *skilled_ : *unskilled_).cdf(theta);
  }
  return 0.0;
}

double SignalKernel::survival_dy(double theta, double y) const {
  switch (kind_) {
    case KernelKind::polynomial:
      check_poly_skill(y);
      if (theta <= 0.0 || theta >= 1.0) return 0.0;
      return -std::pow(theta, y + 1.0) * std::log(theta);
    case KernelKind::gaussian:
      return standard_normal_pdf((theta - y) / sd_) / sd_;
    case KernelKind::binary:
      return 0.0;
  }
  return 0.0;
}

double SignalKernel::dlog_dy(double x, double y) const {
  switch (kind_) {
    case KernelKind::polynomial:
      return 1.0 / (y + 1.0) + std::log(x);
    case KernelKind::gaussian:
      return (x - y) / (sd_ * sd_);
    case KernelKind::binary:
      return 0.0;
  }
  return 0.0;
}

double SignalKernel::d2log_dy2(double, double y) const {
  switch (kind_) {
    case KernelKind::polynomial:
      return -1.0 / ((y + 1.0) * (y + 1.0));
    case KernelKind::gaussian:
      return -1.0 / (sd_ * sd_);
    case KernelKind::binary:
      return 0.0;
  }
  return 0.0;
}

double SignalKernel::sample(double y, RngStream& rng) const {
  switch (kind_) {
    case KernelKind::polynomial:
      check_poly_skill(y);
      return std::pow(rng.uniform(), 1.0 / (y + 1.0));
    case KernelKind::gaussian:
      return y + sd_ * rng.normal();
    case KernelKind::binary:
      return (y >= cutoff_ ? *skilled_ : *unskilled_).sample(rng);
  }
  return 0.0;
}

Interval SignalKernel::signal_domain(const Interval& skills) const {
  if (kind_ == KernelKind::gaussian) return Interval(skills.lo - 8.0 * sd_, skills.hi + 8.0 * sd_);
  return Interval(0.0, 1.0);
}

std::vector<double> SignalKernel::breakpoints() const {
  if (kind_ == KernelKind::binary) return {cutoff_};
  return {};
}

std::string SignalKernel::describe() const {
  std::ostringstream os;
  os.precision(9);
  switch (kind_) {
    case KernelKind::polynomial:
      os << "polynomial";
      break;
    case KernelKind::gaussian:
      os << "gaussian(" << sd_ << ")";
      break;
    case KernelKind::binary:
      os << "binary(" << cutoff_ << ";" << skilled_->describe() << ";" << unskilled_->describe() << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------- specs

double UtilitySpec::production(double h) const {
  h = std::clamp(h, 0.0, 1.0);
  return alpha == 1.0 ? h : std::pow(h, alpha);
}

void UtilitySpec::validate() const {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw DomainError("utility alpha must be > 0");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(cutoff)) {
    throw DomainError("utility parameters must be finite");
  }
}

void WageSpec::validate() const {
  if (kind == Kind::flat && !(w >= 0 && std::isfinite(w))) throw DomainError("flat wage must be >= 0");
}

double CostSpec::cost(Group g, double y_new, double y) const {
  const double d = std::max(0.0, y_new - y);
  return kind == Kind::quadratic ? 0.5 * scale(g) * d * d : scale(g) * d;
}

double CostSpec::d_cost(Group g, double y_new, double y) const {
  if (y_new < y) return 0.0;
  return kind == Kind::quadratic ? scale(g) * (y_new - y) : scale(g);
}

double CostSpec::d2_cost(Group g, double, double) const { return kind == Kind::quadratic ? scale(g) : 0.0; }

void CostSpec::validate() const {
  if (!(c_maj > 0) || !(c_min > 0) || !std::isfinite(c_maj) || !std::isfinite(c_min)) {
    throw DomainError("cost scales must be > 0");
  }
}

// ---------------------------------------------------------------- tables

HermiteTable::HermiteTable(Interval domain, std::vector<double> values, std::vector<double> slopes,
                           std::vector<double> curvatures)
    : domain_(domain), v_(std::move(values)), d_(std::move(slopes)), c_(std::move(curvatures)) {
  if (v_.size() < 2 || v_.size() != d_.size() || (!c_.empty() && c_.size() != v_.size())) {
    throw DomainError("hermite table needs >= 2 matching nodes");
  }
}

namespace {

struct Cell {
  std::size_t i;
  double t;
  double h;
};

Cell locate(const Interval& dom, std::size_t nodes, double y) {
  const double n = static_cast<double>(nodes - 1);
  const double h = dom.width() / n;
  const double s = (dom.clamp(y) - dom.lo) / h;
  const auto i = std::min(static_cast<std::size_t>(s), nodes - 2);
  return {i, s - static_cast<double>(i), h};
}

}  // namespace

double HermiteTable::operator()(double y) const {
  const auto c = locate(domain_, v_.size(), y);
  const double t = c.t, t2 = t * t, t3 = t2 * t, h = c.h;
  const std::size_t i = c.i;
  if (c_.empty()) {
    return (2 * t3 - 3 * t2 + 1) * v_[i] + (t3 - 2 * t2 + t) * h * d_[i] + (-2 * t3 + 3 * t2) * v_[i + 1] +
           (t3 - t2) * h * d_[i + 1];
  }
  const double t4 = t3 * t, t5 = t4 * t;
  return (1 - 10 * t3 + 15 * t4 - 6 * t5) * v_[i] + (t - 6 * t3 + 8 * t4 - 3 * t5) * h * d_[i] +
         0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * h * h * c_[i] + 0.5 * (t3 - 2 * t4 + t5) * h * h * c_[i + 1] +
         (-4 * t3 + 7 * t4 - 3 * t5) * h * d_[i + 1] + (10 * t3 - 15 * t4 + 6 * t5) * v_[i + 1];
}

double HermiteTable::prime(double y) const {
  if (y < domain_.lo || y > domain_.hi) return 0.0;
  const auto c = locate(domain_, v_.size(), y);
  const double t = c.t, t2 = t * t, h = c.h;
  const std::size_t i = c.i;
  if (c_.empty()) {
    return ((6 * t2 - 6 * t) * v_[i] + (-6 * t2 + 6 * t) * v_[i + 1]) / h + (3 * t2 - 4 * t + 1) * d_[i] +
           (3 * t2 - 2 * t) * d_[i + 1];
  }
  const double t3 = t2 * t, t4 = t3 * t;
  return (-30 * t2 + 60 * t3 - 30 * t4) * (v_[i] - v_[i + 1]) / h + (1 - 18 * t2 + 32 * t3 - 15 * t4) * d_[i] +
         0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4) * h * c_[i] + 0.5 * (3 * t2 - 8 * t3 + 5 * t4) * h * c_[i + 1] +
         (-12 * t2 + 28 * t3 - 15 * t4) * d_[i + 1];
}

class IncentiveCache {
 public:
  std::shared_ptr<const HermiteTable> find(double theta) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = curves_.find(theta);
    return it == curves_.end() ? nullptr : it->second;
  }
  void put(double theta, std::shared_ptr<const HermiteTable> c) {
    std::lock_guard<std::mutex> lock(mu_);
    if (curves_.size() >= 4096) curves_.clear();
    curves_.emplace(theta, std::move(c));
  }

 private:
  std::mutex mu_;
  std::map<double, std::shared_ptr<const HermiteTable>> curves_;
};

// ---------------------------------------------------------------- market

namespace {

Interval default_box(const SignalKernel& k, const Density& skill) {
  if (k.kind() == KernelKind::gaussian) return skill.support();
  return Interval(0.0, 1.0);
}

// Posterior mean of u(y) given x and the (unscaled) marginal density of x.
// Integrands are divided by their grid maximum so that tiny marginals keep
// full relative accuracy.
std::pair<double, double> posterior_direct(const Density& skill, const SignalKernel& k, const UtilitySpec& u,
                                           const Tolerances& tol, double x) {
  const Interval& s = skill.support();
  double scale = 0.0;
  for (int i = 0; i <= 128; ++i) {
    const double y = s.grid_point(i, 128);
    scale = std::max(scale, k.pdf(x, y) * skill.pdf(y));
  }
  if (!(scale > 0) || !std::isfinite(scale)) {
    return {u.base_value(x <= s.lo ? s.lo : s.hi), 0.0};
  }
  const double den = integrate([&](double y) { return k.pdf(x, y) * skill.pdf(y) / scale; }, s, tol);
  if (!(den > 0)) return {u.base_value(x <= s.lo ? s.lo : s.hi), 0.0};
  const double num =
      integrate([&](double y) { return u.base_value(y) * k.pdf(x, y) * skill.pdf(y) / scale; }, s, tol);
  return {num / den, den * scale};
}

}  // namespace

ContinuousMarket::ContinuousMarket(Density skill, SignalKernel kernel, UtilitySpec utility, WageSpec wages,
                                   CostSpec cost, double lambda_maj, std::optional<Interval> policy_box,
                                   Tolerances tol)
    : skill_(std::move(skill)),
      kernel_(std::move(kernel)),
      utility_(utility),
      wages_(wages),
      cost_(cost),
      lambda_(lambda_maj),
      box_(policy_box.value_or(default_box(kernel_, skill_))),
      tol_(tol),
      signals_(kernel_.signal_domain(skill_.support())),
      cache_(std::make_shared<IncentiveCache>()) {
  utility_.validate();
  wages_.validate();
  cost_.validate();
  tol_.validate();
  if (!(lambda_ > 0.0 && lambda_ <= 1.0)) throw DomainError("lambda_maj must lie in (0, 1]");
  if (kernel_.kind() == KernelKind::polynomial && !(skill_.support().lo > -1.0)) {
    throw DomainError("polynomial kernel needs skill support above -1");
  }
  if (wages_.kind == WageSpec::Kind::nash && kernel_.smooth_in_skill()) {
    const Interval& s = skill_.support();
    const Interval dom = kernel_.signal_domain(Interval(s.lo, s.hi + reach(Group::maj)));
    const int n = std::clamp(static_cast<int>(dom.width() / 0.02), 256, 4096);
    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
      v[static_cast<std::size_t>(i)] = posterior_direct(skill_, kernel_, utility_, tol_, dom.grid_point(i, n)).first;
    }
    const double h = dom.width() / n;
    std::vector<double> d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i == 0) {
        d[i] = (v[1] - v[0]) / h;
      } else if (i + 1 == v.size()) {
        d[i] = (v[i] - v[i - 1]) / h;
      } else {
        d[i] = (v[i + 1] - v[i - 1]) / (2 * h);
      }
    }
    posterior_ = std::make_shared<HermiteTable>(dom, std::move(v), std::move(d));
  }
}

double ContinuousMarket::reach(Group g) const {
  const double width = skill_.support().width();
  if (wages_.kind == WageSpec::Kind::nash) return width;
  const double c = cost_.scale(g);
  const double bound = cost_.kind == CostSpec::Kind::quadratic ? std::sqrt(2.0 * wages_.w / c) : wages_.w / c;
  return std::min(width, bound);
}

double ContinuousMarket::posterior_mean(double x) const {
  if (posterior_) return (*posterior_)(x);
  return posterior_direct(skill_, kernel_, utility_, tol_, x).first;
}

namespace {

// Wage income of a skill-y worker under Nash wages, by direct quadrature.
double nash_income_direct(const ContinuousMarket& m, double theta, double y) {
  const SignalKernel& k = m.kernel();
  Interval xs = k.kind() == KernelKind::gaussian ? Interval(y - 8.0 * k.sd(), y + 8.0 * k.sd()) : Interval(0, 1);
  const double lo = std::max(theta, xs.lo);
  if (!(lo < xs.hi)) return 0.0;
  return integrate([&](double x) { return m.posterior_mean(x) * k.pdf(x, y); }, Interval(lo, xs.hi), m.tol());
}

double nash_income_curvature(const ContinuousMarket& m, double theta, double y) {
  const SignalKernel& k = m.kernel();
  Interval xs = k.kind() == KernelKind::gaussian ? Interval(y - 8.0 * k.sd(), y + 8.0 * k.sd()) : Interval(0, 1);
  const double lo = std::max(theta, xs.lo);
  if (!(lo < xs.hi)) return 0.0;
  return integrate(
      [&](double x) {
        const double s = k.dlog_dy(x, y);
        return m.posterior_mean(x) * k.pdf(x, y) * (k.d2log_dy2(x, y) + s * s);
      },
      Interval(lo, xs.hi), m.tol());
}

double nash_income_slope(const ContinuousMarket& m, double theta, double y) {
  const SignalKernel& k = m.kernel();
  Interval xs = k.kind() == KernelKind::gaussian ? Interval(y - 8.0 * k.sd(), y + 8.0 * k.sd()) : Interval(0, 1);
  const double lo = std::max(theta, xs.lo);
  if (!(lo < xs.hi)) return 0.0;
  return integrate([&](double x) { return m.posterior_mean(x) * k.pdf(x, y) * k.dlog_dy(x, y); },
                   Interval(lo, xs.hi), m.tol());
}

}  // namespace

std::shared_ptr<const HermiteTable> ContinuousMarket::incentive_curve(double theta) const {
  if (auto c = cache_->find(theta)) return c;
  const Interval& s = skill_.support();
  const Interval dom(s.lo, s.hi + std::max(reach(Group::maj), reach(Group::min)));
  constexpr int n = 512;
  std::vector<double> v(n + 1), d(n + 1), c(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double y = dom.grid_point(i, n);
    const auto k = static_cast<std::size_t>(i);
    v[k] = nash_income_direct(*this, theta, y);
    d[k] = nash_income_slope(*this, theta, y);
    c[k] = nash_income_curvature(*this, theta, y);
  }
  auto curve = std::make_shared<const HermiteTable>(dom, std::move(v), std::move(d), std::move(c));
  cache_->put(theta, curve);
  return curve;
}

// ---------------------------------------------------------------- operations

HireProbs hire_prob(const ContinuousMarket& m, const PolicyPair& pair, double y) {
  HireProbs h;
  h.maj = m.kernel().survival(pair.theta_maj, y);
  h.min = m.kernel().survival(pair.theta_min, y);
  h.pooled = m.lambda_maj() * h.maj + (1.0 - m.lambda_maj()) * h.min;
  return h;
}

double incentive(const ContinuousMarket& m, double theta, double y) {
  if (m.wages().kind == WageSpec::Kind::flat) return m.wages().w * m.kernel().survival(theta, y);
  if (!m.kernel().smooth_in_skill()) return nash_income_direct(m, theta, y);
  const auto curve = m.incentive_curve(theta);
  if (!curve->domain().contains(y)) return nash_income_direct(m, theta, y);
  return (*curve)(y);
}

double incentive_slope(const ContinuousMarket& m, double theta, double y) {
  if (!m.kernel().smooth_in_skill()) return 0.0;
  if (m.wages().kind == WageSpec::Kind::flat) return m.wages().w * m.kernel().survival_dy(theta, y);
  const auto curve = m.incentive_curve(theta);
  if (!curve->domain().contains(y)) return nash_income_slope(m, theta, y);
  return curve->prime(y);
}

double maximize_worker_objective(const std::function<double(double)>& income,
                                 const std::function<double(double)>& slope, const CostSpec& cost, Group g,
                                 double y, double reach, const std::vector<double>& jumps) {
  if (!(reach > 0)) return y;
  const Interval dom(y, y + reach);
  auto objective = [&](double yn) { return income(yn) - cost.cost(g, yn, y); };

  constexpr int n = 64;
  double best_arg = y;
  double best_val = objective(y);
  int best_i = 0;
  for (int i = 1; i <= n; ++i) {
    const double yn = dom.grid_point(i, n);
    const double v = objective(yn);
    if (v > best_val) {
      best_val = v;
      best_arg = yn;
      best_i = i;
    }
  }
  for (double b : jumps) {
    if (b > y && b <= dom.hi) {
      const double v = objective(b);
      if (v > best_val || (v == best_val && b < best_arg)) {
        best_val = v;
        best_arg = b;
        best_i = -1;
      }
    }
  }
  if (best_i < 0 || !slope) return best_arg;

  auto foc = [&](double yn) { return slope(yn) - cost.d_cost(g, yn, y); };
  if (best_i == 0 && foc(y) <= 0.0) return y;

  const Extremum gs = golden_maximize(objective, dom.grid_point(std::max(best_i - 1, 0), n),
                                      dom.grid_point(std::min(best_i + 1, n), n), 1e-7);
  if (gs.val > best_val) {
    best_val = gs.val;
    best_arg = gs.arg;
  }
  // Polish on the first-order condition.
  double a = std::max(dom.lo, best_arg - 1e-5);
  double b = std::min(dom.hi, best_arg + 1e-5);
  if (a < b && foc(a) > 0.0 && foc(b) < 0.0) {
    for (int it = 0; it < 100 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
      const double mid = 0.5 * (a + b);
      if (!(mid > a && mid < b)) break;
      (foc(mid) > 0.0 ? a : b) = mid;
    }
    const double root = 0.5 * (a + b);
    const double v = objective(root);
    if (v >= best_val - 1e-13 * std::max(1.0, std::abs(best_val))) best_arg = root;
  }
  return best_arg;
}

double worker_best_response(const ContinuousMarket& m, Group g, double theta, double y) {
  std::shared_ptr<const HermiteTable> curve;
  if (m.wages().kind == WageSpec::Kind::nash && m.kernel().smooth_in_skill()) curve = m.incentive_curve(theta);
  auto income = [&](double yn) {
    return curve && curve->domain().contains(yn) ? (*curve)(yn) : incentive(m, theta, yn);
  };
  std::function<double(double)> slope;
  if (m.kernel().smooth_in_skill()) {
    slope = [&](double yn) {
      return curve && curve->domain().contains(yn) ? curve->prime(yn) : incentive_slope(m, theta, yn);
    };
  }
  return maximize_worker_objective(income, slope, m.cost(), g, y, m.reach(g), m.kernel().breakpoints());
}

double nash_wage(const ContinuousMarket& m, double theta, double x) {
  if (x < theta) return 0.0;
  const auto [mean, den] = posterior_direct(m.skill(), m.kernel(), m.utility(), m.tol(), x);
  if (!(den > 1e-12)) {
    std::ostringstream os;
    os << "marginal signal density vanishes at x=" << x;
    throw UndefinedSignalError(os.str());
  }
  return m.utility().production(1.0) * mean;
}

double production_hire_prob(const ContinuousMarket& m, Group g, const PolicyPair& pair, double y) {
  const HireProbs h = hire_prob(m, pair, y);
  if (m.utility().separable() || m.single_group()) return g == Group::maj ? h.maj : h.min;
  return h.pooled;
}

namespace {

std::vector<Group> active_groups(const ContinuousMarket& m) {
  if (m.single_group()) return {Group::maj};
  return {Group::maj, Group::min};
}

double theta_of(const PolicyPair& p, Group g) { return g == Group::maj ? p.theta_maj : p.theta_min; }

// Y+(y) for one group and threshold, memoized by skill level.
class ResponseMemo {
 public:
  ResponseMemo(const ContinuousMarket& m, Group g, double theta) : m_(&m), g_(g), theta_(theta) {}
  double operator()(double y) {
    const auto it = memo_.find(y);
    if (it != memo_.end()) return it->second;
    const double r = worker_best_response(*m_, g_, theta_, y);
    memo_.emplace(y, r);
    return r;
  }
  double theta() const { return theta_; }
  Group group() const { return g_; }

 private:
  const ContinuousMarket* m_;
  Group g_;
  double theta_;
  std::unordered_map<double, double> memo_;
};

double expect(const ContinuousMarket& m, const std::function<double(double)>& f) {
  const Density& p = m.skill();
  return integrate([&](double y) { return p.pdf(y) * f(y); }, p.support(), m.tol());
}

// E over p(y) of the group-g production term for responses `resp`.
double group_production(const ContinuousMarket& m, Group g, ResponseMemo& resp, const PolicyPair& pair) {
  return expect(m, [&](double y) {
    const double yn = resp(y);
    return m.utility().value(yn, production_hire_prob(m, g, pair, yn));
  });
}

// Measure under p(y) of the skills where `positive` holds.
double positive_mass(const ContinuousMarket& m, const std::function<bool(double)>& positive) {
  const Interval& s = m.skill().support();
  auto sign = [&](double y) { return positive(y) ? 1.0 : -1.0; };
  std::vector<double> cuts{s.lo};
  for (double c : sign_changes_1d(sign, s, 256, 1e-12)) {
    if (c > cuts.back()) cuts.push_back(c);
  }
  if (s.hi > cuts.back()) cuts.push_back(s.hi);
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (positive(0.5 * (cuts[i] + cuts[i + 1]))) mass += m.skill().cdf(cuts[i + 1]) - m.skill().cdf(cuts[i]);
  }
  return std::clamp(mass, 0.0, 1.0);
}

}  // namespace

double employer_perf_utility(const ContinuousMarket& m, const PolicyPair& pair) {
  double total = 0.0;
  for (Group g : active_groups(m)) {
    ResponseMemo resp(m, g, theta_of(pair, g));
    total += m.weight(g) * group_production(m, g, resp, pair);
  }
  return total;
}

double employer_static_utility(const ContinuousMarket& m, const PolicyPair& pair) {
  double total = 0.0;
  for (Group g : active_groups(m)) {
    total += m.weight(g) *
             expect(m, [&](double y) { return m.utility().value(y, production_hire_prob(m, g, pair, y)); });
  }
  return total;
}

double group_welfare(const ContinuousMarket& m, Group g, double theta) {
  return expect(m, [&](double y) {
    const double yn = worker_best_response(m, g, theta, y);
    return incentive(m, theta, yn) - m.cost().cost(g, yn, y);
  });
}

double aggregate_worker_welfare(const ContinuousMarket& m, const PolicyPair& pair) {
  double total = 0.0;
  for (Group g : active_groups(m)) total += m.weight(g) * group_welfare(m, g, theta_of(pair, g));
  return total;
}

double group_qualified(const ContinuousMarket& m, Group g, const PolicyPair& pair) {
  ResponseMemo resp(m, g, theta_of(pair, g));
  return positive_mass(m, [&](double y) {
    const double yn = resp(y);
    return m.utility().value(yn, production_hire_prob(m, g, pair, yn)) > 0.0;
  });
}

double proportion_qualified(const ContinuousMarket& m, const PolicyPair& pair) {
  double total = 0.0;
  for (Group g : active_groups(m)) total += m.weight(g) * group_qualified(m, g, pair);
  return total;
}

double zero_profit_residual(const ContinuousMarket& m, const PolicyPair& pair) {
  double total = 0.0;
  for (Group g : active_groups(m)) {
    const double theta = theta_of(pair, g);
    const double produced =
        expect(m, [&](double y) { return m.utility().value(y, production_hire_prob(m, g, pair, y)); });
    const double paid = expect(m, [&](double y) { return incentive(m, theta, y); });
    total += m.weight(g) * (produced - paid);
  }
  return total;
}

ContinuousStable find_stable_continuous(const ContinuousMarket& m, PolicyPair pair0, double tol, int max_iters) {
  const Interval& box = m.policy_box();
  ContinuousStable out;
  PolicyPair cur{box.clamp(pair0.theta_maj), box.clamp(pair0.theta_min)};
  if (m.single_group()) cur.theta_min = cur.theta_maj;
  out.trajectory.push_back(cur);
  const auto groups = active_groups(m);
  for (int it = 0; it < max_iters; ++it) {
    std::vector<ResponseMemo> frozen;
    for (Group g : groups) frozen.emplace_back(m, g, theta_of(cur, g));
    PolicyPair next = cur;
    for (Group g : groups) {
      auto objective = [&](double theta) {
        PolicyPair trial = cur;
        (g == Group::maj ? trial.theta_maj : trial.theta_min) = theta;
        if (m.single_group()) trial.theta_min = trial.theta_maj;
        double v = 0.0;
        for (std::size_t j = 0; j < groups.size(); ++j) {
          // Under separable utility only the group's own workers depend on theta.
          if (m.utility().separable() && groups[j] != g) continue;
          v += m.weight(groups[j]) * group_production(m, groups[j], frozen[j], trial);
        }
        return v;
      };
      const double best = maximize_1d(objective, box, 64, m.tol()).arg;
      (g == Group::maj ? next.theta_maj : next.theta_min) = best;
    }
    if (m.single_group()) next.theta_min = next.theta_maj;
    const double step = std::max(std::abs(next.theta_maj - cur.theta_maj), std::abs(next.theta_min - cur.theta_min));
    cur = next;
    out.trajectory.push_back(cur);
    out.iterations = it + 1;
    if (step < tol) {
      out.converged = true;
      break;
    }
  }
  out.pair = cur;
  return out;
}

ContinuousOptimum find_optimal_continuous(const ContinuousMarket& m, int grid_n,
                                          const std::vector<PolicyPair>& candidates) {
  const Interval& box = m.policy_box();
  ContinuousOptimum best;
  if (m.utility().separable() || m.single_group()) {
    for (Group g : active_groups(m)) {
      auto objective = [&](double theta) {
        ResponseMemo resp(m, g, theta);
        return group_production(m, g, resp, PolicyPair{theta, theta});
      };
      const double arg = maximize_1d(objective, box, grid_n, m.tol()).arg;
      (g == Group::maj ? best.pair.theta_maj : best.pair.theta_min) = arg;
    }
    if (m.single_group()) best.pair.theta_min = best.pair.theta_maj;
  } else {
    // Responses of each group depend only on its own threshold: memoize them
    // per threshold so the joint scan re-solves each worker problem once.
    std::map<std::pair<int, double>, ResponseMemo> memos;
    auto memo = [&](Group g, double theta) -> ResponseMemo& {
      const auto key = std::make_pair(static_cast<int>(g), theta);
      auto it = memos.find(key);
      if (it == memos.end()) it = memos.emplace(key, ResponseMemo(m, g, theta)).first;
      return it->second;
    };
    auto value = [&](const PolicyPair& p) {
      return m.weight(Group::maj) * group_production(m, Group::maj, memo(Group::maj, p.theta_maj), p) +
             m.weight(Group::min) * group_production(m, Group::min, memo(Group::min, p.theta_min), p);
    };
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid_n; ++i) {
      for (int j = 0; j <= grid_n; ++j) {
        const PolicyPair p{box.grid_point(i, grid_n), box.grid_point(j, grid_n)};
        const double v = value(p);
        if (v > best_val) {
          best_val = v;
          best.pair = p;
        }
      }
    }
    const double cell = box.width() / grid_n;
    for (int pass = 0; pass < 2; ++pass) {
      for (Group g : {Group::maj, Group::min}) {
        const double centre = theta_of(best.pair, g);
        const double lo = box.clamp(centre - cell);
        const double hi = box.clamp(centre + cell);
        auto along = [&](double theta) {
          PolicyPair p = best.pair;
          (g == Group::maj ? p.theta_maj : p.theta_min) = theta;
          return value(p);
        };
        const Extremum e = golden_maximize(along, lo, hi, m.tol().opt_tol);
        if (e.val > best_val) {
          best_val = e.val;
          (g == Group::maj ? best.pair.theta_maj : best.pair.theta_min) = e.arg;
        }
      }
    }
  }
  best.value = employer_perf_utility(m, best.pair);
  for (const auto& c : candidates) {
    const double v = employer_perf_utility(m, c);
    if (v > best.value) {
      best.value = v;
      best.pair = c;
    }
  }
  return best;
}

PolicyMetrics evaluate_policy(const ContinuousMarket& m, const PolicyPair& pair) {
  PolicyMetrics r;
  r.utility = employer_perf_utility(m, pair);
  r.welfare_maj = group_welfare(m, Group::maj, pair.theta_maj);
  r.qualified_maj = group_qualified(m, Group::maj, pair);
  if (m.single_group()) {
    r.welfare_min = r.welfare_maj;
    r.qualified_min = r.qualified_maj;
  } else {
    r.welfare_min = group_welfare(m, Group::min, pair.theta_min);
    r.qualified_min = group_qualified(m, Group::min, pair);
  }
  const double l = m.lambda_maj();
  r.welfare = l * r.welfare_maj + (1 - l) * r.welfare_min;
  r.qualified = l * r.qualified_maj + (1 - l) * r.qualified_min;
  r.gap = std::abs(r.qualified_maj - r.qualified_min);
  r.zero_profit = zero_profit_residual(m, pair);
  return r;
}

}  // namespace stratlabor
