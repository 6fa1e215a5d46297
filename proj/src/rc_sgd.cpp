#include "stratlabor/rc_sgd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "stratlabor/parallel.hpp"

namespace stratlabor {

// ---------------------------------------------------------------- policy, loss

double SmoothPolicy::f(double x) const {
  const double z = (x - theta) / temperature;
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double SmoothPolicy::dtheta(double x) const {
  const double v = f(x);
  return -v * (1.0 - v) / temperature;
}

void SmoothPolicy::validate() const {
  if (!std::isfinite(theta)) throw DomainError("policy threshold must be finite");
  if (!(temperature > 0) || !std::isfinite(temperature)) throw DomainError("policy temperature must be > 0");
}

LossSpec LossSpec::negative_utility(const UtilitySpec& u) {
  u.validate();
  const double slope = u.base == UtilitySpec::Base::linear ? u.a : 0.0;
  LossSpec l;
  l.loss = [u](double f, double y) { return -u.value(y, f); };
  l.d1 = [u](double f, double y) {
    const double g = u.alpha == 1.0 ? 1.0 : u.alpha * std::pow(std::clamp(f, 0.0, 1.0), u.alpha - 1.0);
    return -g * u.base_value(y);
  };
  l.d2 = [u, slope](double f, double) { return -u.production(f) * slope; };
  return l;
}

LossSpec LossSpec::constant(double c) {
  LossSpec l;
  l.loss = [c](double, double) { return c; };
  l.d1 = [](double, double) { return 0.0; };
  l.d2 = [](double, double) { return 0.0; };
  return l;
}

LossSpec LossSpec::prediction() {
  LossSpec l;
  l.loss = [](double f, double) { return f; };
  l.d1 = [](double, double) { return 1.0; };
  l.d2 = [](double, double) { return 0.0; };
  return l;
}

// ---------------------------------------------------------------- response model

class ScoreIncomeCache {
 public:
  using Key = std::pair<double, double>;
  std::shared_ptr<const HermiteTable> find(const Key& k) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = curves_.find(k);
    return it == curves_.end() ? nullptr : it->second;
  }
  void put(const Key& k, std::shared_ptr<const HermiteTable> c) {
    std::lock_guard<std::mutex> lock(mu_);
    if (curves_.size() >= 1024) curves_.clear();
    curves_.emplace(k, std::move(c));
  }

 private:
  std::mutex mu_;
  std::map<Key, std::shared_ptr<const HermiteTable>> curves_;
};

ResponseModel::ResponseModel(ContinuousMarket market, Group g)
    : market_(std::move(market)), group_(g), cache_(std::make_shared<ScoreIncomeCache>()) {
  if (market_.wages().kind != WageSpec::Kind::flat) throw DomainError("strategic SGD needs flat wages");
  if (!market_.kernel().smooth_in_skill()) throw DomainError("strategic SGD needs a kernel smooth in skill");
}

ResponseModel ResponseModel::static_workers(ContinuousMarket market, Group g) {
  ResponseModel m(std::move(market), g);
  m.static_ = true;
  return m;
}

template <class F>
double ResponseModel::signal_integral(const SmoothPolicy& p, double y, F&& g) const {
  const SignalKernel& k = market_.kernel();
  const Interval xs =
      k.kind() == KernelKind::gaussian ? Interval(y - 8.0 * k.sd(), y + 8.0 * k.sd()) : Interval(0.0, 1.0);
  // Cut around the steep part of the logistic.
  const double band = 12.0 * p.temperature;
  double cuts[4] = {xs.lo, std::clamp(p.theta - band, xs.lo, xs.hi), std::clamp(p.theta + band, xs.lo, xs.hi),
                    xs.hi};
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (cuts[i + 1] > cuts[i]) total += integrate(g, Interval(cuts[i], cuts[i + 1]), market_.tol());
  }
  return total;
}

double ResponseModel::score_mean(const SmoothPolicy& p, double y) const {
  const SignalKernel& k = market_.kernel();
  return signal_integral(p, y, [&](double x) { return p.f(x) * k.pdf(x, y); });
}

double ResponseModel::score_mean_dy(const SmoothPolicy& p, double y) const {
  const SignalKernel& k = market_.kernel();
  return signal_integral(p, y, [&](double x) {
    const double d = k.pdf(x, y);
    return d > 0 ? p.f(x) * d * k.dlog_dy(x, y) : 0.0;
  });
}

double ResponseModel::score_mean_d2y(const SmoothPolicy& p, double y) const {
  const SignalKernel& k = market_.kernel();
  return signal_integral(p, y, [&](double x) {
    const double d = k.pdf(x, y);
    if (!(d > 0)) return 0.0;
    const double s = k.dlog_dy(x, y);
    return p.f(x) * d * (k.d2log_dy2(x, y) + s * s);
  });
}

double ResponseModel::score_dtheta(const SmoothPolicy& p, double y) const {
  const SignalKernel& k = market_.kernel();
  return signal_integral(p, y, [&](double x) { return p.dtheta(x) * k.pdf(x, y); });
}

double ResponseModel::score_dtheta_dy(const SmoothPolicy& p, double y) const {
  const SignalKernel& k = market_.kernel();
  return signal_integral(p, y, [&](double x) {
    const double d = k.pdf(x, y);
    return d > 0 ? p.dtheta(x) * d * k.dlog_dy(x, y) : 0.0;
  });
}

double ResponseModel::expected_loss(const SmoothPolicy& p, const LossSpec& loss, double y) const {
  const SignalKernel& k = market_.kernel();
  return signal_integral(p, y, [&](double x) { return loss.loss(p.f(x), y) * k.pdf(x, y); });
}

std::shared_ptr<const HermiteTable> ResponseModel::income_curve(const SmoothPolicy& p) const {
  const ScoreIncomeCache::Key key{p.theta, p.temperature};
  if (auto c = cache_->find(key)) return c;
  const Interval& s = market_.skill().support();
  const Interval dom(s.lo, s.hi + market_.reach(group_));
  const double w = market_.wages().w;
  constexpr int n = 512;
  std::vector<double> v(n + 1), d(n + 1), c(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double y = dom.grid_point(i, n);
    const auto j = static_cast<std::size_t>(i);
    v[j] = w * score_mean(p, y);
    d[j] = w * score_mean_dy(p, y);
    c[j] = w * score_mean_d2y(p, y);
  }
  auto curve = std::make_shared<const HermiteTable>(dom, std::move(v), std::move(d), std::move(c));
  cache_->put(key, curve);
  return curve;
}

double ResponseModel::response(const SmoothPolicy& p, double y) const {
  if (static_) return y;
  const auto curve = income_curve(p);
  return maximize_worker_objective([&](double yn) { return (*curve)(yn); },
                                   [&](double yn) { return curve->prime(yn); }, market_.cost(), group_, y,
                                   market_.reach(group_));
}

bool ResponseModel::at_boundary(double y, double response) const {
  const double eps = 1e-12 * std::max(1.0, std::abs(y));
  return response <= y + eps || response >= y + market_.reach(group_) - eps;
}

// ---------------------------------------------------------------- gradients

namespace {

double implicit_ratio(double a, double b) {
  if (!(std::abs(b) > 1e-8)) throw DegenerateResponseError("worker objective is locally flat at its optimum");
  return -a / b;
}

}  // namespace

double argmax_grad(const ResponseModel& model, const SmoothPolicy& p, double y) {
  if (model.is_static()) return 0.0;
  const double g = model.response(p, y);
  if (model.at_boundary(y, g)) return 0.0;
  const ContinuousMarket& m = model.market();
  const double w = m.wages().w;
  const double a = w * model.score_dtheta_dy(p, g);
  const double b = w * model.score_mean_d2y(p, g) - m.cost().d2_cost(model.group(), g, y);
  return implicit_ratio(a, b);
}

double argmax_grad(const ResponseModel& model, const SmoothPolicy& p, double y, int n_inner, RngStream& rng) {
  if (n_inner < 1) throw DomainError("argmax_grad needs n_inner >= 1");
  if (model.is_static()) return 0.0;
  const double g = model.response(p, y);
  if (model.at_boundary(y, g)) return 0.0;
  const ContinuousMarket& m = model.market();
  const SignalKernel& k = m.kernel();
  double sa = 0.0;
  double sb = 0.0;
  for (int j = 0; j < n_inner; ++j) {
    const double x = k.sample(g, rng);
    const double s = k.dlog_dy(x, g);
    sa += p.dtheta(x) * s;
    sb += p.f(x) * (k.d2log_dy2(x, g) + s * s);
  }
  const double w = m.wages().w;
  return implicit_ratio(w * sa / n_inner, w * sb / n_inner - m.cost().d2_cost(model.group(), g, y));
}

GradientEstimate reinforce_grad(const ResponseModel& model, const SmoothPolicy& p, const LossSpec& loss,
                                const std::vector<double>& y_batch, int n_inner, const RngStream& rng,
                                int threads) {
  if (y_batch.empty()) throw DomainError("reinforce_grad needs a nonempty batch");
  if (n_inner < 1) throw DomainError("reinforce_grad needs n_inner >= 1");
  p.validate();
  struct Sample {
    double g1 = 0, g2 = 0, g3 = 0, loss = 0;
    bool ok = false;
  };
  const SignalKernel& k = model.market().kernel();
  std::vector<Sample> out(y_batch.size());
  parallel_for(y_batch.size(), threads, [&](std::size_t i) {
    RngStream r = rng.child(i);
    const double y = y_batch[i];
    const double g = model.response(p, y);
    double dg = 0.0;
    try {
      dg = argmax_grad(model, p, y);
    } catch (const DegenerateResponseError&) {
      return;
    }
    double s1 = 0, s2 = 0, s3 = 0, sl = 0;
    for (int j = 0; j < n_inner; ++j) {
      const double x = k.sample(g, r);
      const double f = p.f(x);
      const double l = loss.loss(f, g);
      s1 += p.dtheta(x) * loss.d1(f, g);
      s2 += loss.d2(f, g);
      s3 += l * k.dlog_dy(x, g);
      sl += l;
    }
    Sample& s = out[i];
    s.g1 = s1 / n_inner;
    s.g2 = dg * s2 / n_inner;
    s.g3 = dg * s3 / n_inner;
    s.loss = sl / n_inner;
    s.ok = true;
  });

  GradientEstimate est;
  est.n_inner = n_inner;
  double sum_sq = 0.0;
  for (const Sample& s : out) {
    if (!s.ok) {
      ++est.dropped;
      continue;
    }
    ++est.n_outer;
    est.g1 += s.g1;
    est.g2 += s.g2;
    est.g3 += s.g3;
    est.loss += s.loss;
    const double t = s.g1 + s.g2 + s.g3;
    sum_sq += t * t;
  }
  if (est.n_outer == 0) throw EstimationError("every batch sample had a degenerate worker response");
  const double n = est.n_outer;
  est.g1 /= n;
  est.g2 /= n;
  est.g3 /= n;
  est.loss /= n;
  est.total = est.g1 + est.g2 + est.g3;
  if (est.n_outer > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.total * est.total) / (n - 1));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

double loss_quadrature(const ResponseModel& model, const SmoothPolicy& p, const LossSpec& loss) {
  p.validate();
  const Density& skill = model.market().skill();
  return integrate(
      [&](double y) {
        const double d = skill.pdf(y);
        return d > 0 ? d * model.expected_loss(p, loss, model.response(p, y)) : 0.0;
      },
      skill.support(), model.market().tol());
}

// ---------------------------------------------------------------- training loop

void SgdConfig::validate() const {
  if (!(eta0 > 0) || !std::isfinite(eta0)) throw DomainError("eta0 must be > 0");
  if (n_outer < 1 || n_inner < 1) throw DomainError("sample counts must be >= 1");
  if (rounds < 0) throw DomainError("rounds must be >= 0");
  if (population < 0) throw DomainError("population must be >= 0");
  if (!std::isfinite(theta0)) throw DomainError("theta0 must be finite");
  if (!(temperature > 0)) throw DomainError("temperature must be > 0");
}

SgdTrajectory rsgd_run(const ResponseModel& model, const LossSpec& loss, const SgdConfig& cfg, SgdMode mode) {
  cfg.validate();
  const ContinuousMarket& m = model.market();
  const RngStream base(cfg.seed, cfg.stream);
  std::vector<double> pool;
  if (cfg.population > 0) {
    RngStream r = base.child(0);
    pool.reserve(static_cast<std::size_t>(cfg.population));
    for (int i = 0; i < cfg.population; ++i) pool.push_back(m.skill().sample(r));
  }

  SgdTrajectory out;
  double theta = m.policy_box().clamp(cfg.theta0);
  out.theta.push_back(theta);
  std::vector<double> batch(static_cast<std::size_t>(cfg.n_outer));
  for (int t = 0; t < cfg.rounds; ++t) {
    const RngStream round = base.child(static_cast<std::uint64_t>(t) + 1);
    RngStream pick = round.child(0);
    for (double& y : batch) {
      if (pool.empty()) {
        y = m.skill().sample(pick);
      } else {
        const auto i = static_cast<std::size_t>(pick.uniform() * static_cast<double>(pool.size()));
        y = pool[std::min(i, pool.size() - 1)];
      }
    }
    const SmoothPolicy p{theta, cfg.temperature};
    const GradientEstimate g = reinforce_grad(model, p, loss, batch, cfg.n_inner, round.child(1), cfg.threads);
    const double step = mode == SgdMode::naive ? g.g1 : g.total;
    theta = m.policy_box().clamp(theta - cfg.eta0 / (t + 1) * step * g.n_outer);
    out.theta.push_back(theta);
    out.loss_estimate.push_back(g.loss);
    out.dropped.push_back(g.dropped);
  }
  return out;
}

}  // namespace stratlabor
