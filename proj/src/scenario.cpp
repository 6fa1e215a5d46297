#include "stratlabor/scenario.hpp"

#include <filesystem>
#include <set>

#include "preset_data.hpp"

namespace stratlabor {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::coate_loury: return "coate-loury";
    case ModelKind::two_group: return "two-group";
    case ModelKind::continuous: return "continuous";
  }
  return "";
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : embedded_presets()) out.push_back(p.first);
  std::sort(out.begin(), out.end());
  return out;
}

std::string preset_text(const std::string& name) {
  for (const auto& p : embedded_presets()) {
    if (p.first == name) return p.second;
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

namespace {

Config resolve_chain(const Config& cfg, std::set<std::string>& seen) {
  if (!cfg.has("preset")) return cfg;
  const std::string name = cfg.get_string("preset");
  if (!seen.insert(name).second) throw ConfigError("preset", "preset cycle through '" + name + "'");
  Config base = resolve_chain(Config::parse(preset_text(name)), seen);
  Config own = cfg;
  own.erase("preset");
  base.merge(own);
  return base;
}

// Wraps library validation failures so they name the config key.
template <class F>
auto keyed(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

Density read_density(const Config& c, const std::string& prefix) {
  const std::string fam_key = prefix + ".family";
  const std::string fam = c.get_string(fam_key);
  return keyed(prefix, [&] {
    if (fam == "uniform") return Density::uniform(c.get_number(prefix + ".lo", 0.0), c.get_number(prefix + ".hi", 1.0));
    if (fam == "gaussian") {
      return Density::gaussian(c.get_number(prefix + ".mean", 0.0), c.get_number(prefix + ".sd"),
                               c.get_number(prefix + ".truncate", 8.0));
    }
    if (fam == "power") return Density::power(c.get_number(prefix + ".n"));
    if (fam == "linear-ramp") return Density::linear_ramp(c.get_number(prefix + ".a"));
    throw ConfigError(fam_key, "unknown density family '" + fam + "' (uniform, gaussian, power, linear-ramp)");
  });
}

ModelKind read_model(const Config& c) {
  const std::string m = c.get_string("model");
  if (m == "coate-loury") return ModelKind::coate_loury;
  if (m == "two-group") return ModelKind::two_group;
  if (m == "continuous") return ModelKind::continuous;
  throw ConfigError("model", "unknown model '" + m + "' (coate-loury, two-group, continuous)");
}

int read_count(const Config& c, const std::string& key, int fallback, int min) {
  const std::int64_t v = c.get_int(key, fallback);
  if (v < min || v > 100000000) throw ConfigError(key, "must be an integer >= " + std::to_string(min));
  return static_cast<int>(v);
}

double read_positive(const Config& c, const std::string& key, double fallback) {
  const double v = c.get_number(key, fallback);
  if (!(v > 0)) throw ConfigError(key, "must be > 0");
  return v;
}

Tolerances read_tolerances(const Config& c) {
  Tolerances t;
  t.quad_tol = read_positive(c, "numerics.quad_tol", t.quad_tol);
  t.opt_tol = read_positive(c, "numerics.opt_tol", t.opt_tol);
  t.root_tol = read_positive(c, "numerics.root_tol", t.root_tol);
  t.fixed_point_tol = read_positive(c, "numerics.fixed_point_tol", t.fixed_point_tol);
  return t;
}

double read_lambda(const Config& c, double fallback) {
  const double l = c.get_number("market.lambda", fallback);
  if (!(l > 0.0 && l <= 1.0)) throw ConfigError("market.lambda", "must lie in (0, 1]");
  return l;
}

void read_threshold_market(const Config& c, Scenario& s) {
  SignalModel signal = keyed("signal", [&] {
    return SignalModel(read_density(c, "signal.skilled"), read_density(c, "signal.unskilled"));
  });
  CostModel cost = keyed("cost_cdf", [&] { return CostModel(read_density(c, "cost_cdf")); });
  MarketParams p;
  p.wage = c.get_number("market.wage");
  p.reward_pos = c.get_number("market.reward_pos", 1.0);
  p.penalty_neg = c.get_number("market.penalty_neg", 1.0);
  keyed("market", [&] {
    p.validate();
    return 0;
  });
  s.cl = CoateLouryMarket{std::move(signal), std::move(cost), p, s.tol};
  s.lambda_maj = s.model == ModelKind::two_group ? read_lambda(c, 0.5) : 1.0;
}

SignalKernel read_kernel(const Config& c) {
  const std::string fam = c.get_string("kernel.family");
  if (fam == "polynomial") return SignalKernel::polynomial();
  if (fam == "gaussian") return keyed("kernel.sd", [&] { return SignalKernel::gaussian(c.get_number("kernel.sd")); });
  if (fam == "binary") {
    const double cut = c.get_number("kernel.cutoff");
    Density sk = read_density(c, "kernel.skilled");
    Density un = read_density(c, "kernel.unskilled");
    return keyed("kernel", [&] { return SignalKernel::binary(cut, sk, un); });
  }
  throw ConfigError("kernel.family", "unknown kernel '" + fam + "' (polynomial, gaussian, binary)");
}

UtilitySpec read_utility(const Config& c) {
  UtilitySpec u;
  const std::string base = c.get_string("utility.base", "linear");
  if (base == "linear") {
    u.base = UtilitySpec::Base::linear;
  } else if (base == "sign-step") {
    u.base = UtilitySpec::Base::sign_step;
  } else {
    throw ConfigError("utility.base", "unknown utility '" + base + "' (linear, sign-step)");
  }
  u.a = c.get_number("utility.a", u.a);
  u.b = c.get_number("utility.b", u.b);
  u.cutoff = c.get_number("utility.cutoff", u.cutoff);
  u.alpha = c.get_number("utility.alpha", u.alpha);
  keyed("utility", [&] {
    u.validate();
    return 0;
  });
  return u;
}

WageSpec read_wage(const Config& c) {
  WageSpec w;
  const std::string kind = c.get_string("wage.kind", "flat");
  if (kind == "flat") {
    w.kind = WageSpec::Kind::flat;
    w.w = c.get_number("wage.w");
  } else if (kind == "nash") {
    w.kind = WageSpec::Kind::nash;
  } else {
    throw ConfigError("wage.kind", "unknown wage '" + kind + "' (flat, nash)");
  }
  keyed("wage.w", [&] {
    w.validate();
    return 0;
  });
  return w;
}

CostSpec read_cost(const Config& c, double lambda) {
  CostSpec k;
  const std::string kind = c.get_string("cost.kind", "quadratic");
  if (kind == "quadratic") {
    k.kind = CostSpec::Kind::quadratic;
  } else if (kind == "hinge") {
    k.kind = CostSpec::Kind::hinge;
  } else {
    throw ConfigError("cost.kind", "unknown cost '" + kind + "' (quadratic, hinge)");
  }
  if (c.has("cost.c")) {
    if (c.has("cost.c_maj")) throw ConfigError("cost.c_maj", "conflicts with cost.c");
    if (c.has("cost.c_min")) throw ConfigError("cost.c_min", "conflicts with cost.c");
    k.c_maj = k.c_min = c.get_number("cost.c");
  } else {
    k.c_maj = c.get_number("cost.c_maj");
    k.c_min = c.get_number("cost.c_min", k.c_maj);
  }
  if (c.get_bool("cost.lambda_scaled", false)) {
    if (!(lambda < 1.0)) throw ConfigError("cost.lambda_scaled", "needs market.lambda < 1");
    k.c_maj /= lambda;
    k.c_min /= 1.0 - lambda;
  }
  keyed(c.has("cost.c") ? "cost.c" : "cost.c_maj", [&] {
    k.validate();
    return 0;
  });
  return k;
}

// Binary outcome at the kernel cutoff, uniform skill ending at the cutoff,
// hinge cost: investing costs c (cutoff - y) ~ Unif[0, c (cutoff - lo)].
std::optional<CoateLouryMarket> threshold_reduction(const ContinuousMarket& m) {
  const SignalKernel& k = m.kernel();
  const UtilitySpec& u = m.utility();
  const Density& skill = m.skill();
  if (k.kind() != KernelKind::binary || m.cost().kind != CostSpec::Kind::hinge) return std::nullopt;
  if (u.base != UtilitySpec::Base::sign_step || u.cutoff != k.cutoff() || u.alpha != 1.0) return std::nullopt;
  if (m.wages().kind != WageSpec::Kind::flat || m.cost().c_maj != m.cost().c_min) return std::nullopt;
  if (skill.family() != Density::Family::uniform || skill.support().hi != k.cutoff()) return std::nullopt;
  const double m_g = m.cost().c_maj * (k.cutoff() - skill.support().lo);
  return CoateLouryMarket{SignalModel(*k.skilled(), *k.unskilled()), CostModel(Density::uniform(0.0, m_g)),
                          MarketParams{m.wages().w, 1.0, 1.0}, m.tol()};
}

void read_continuous(const Config& c, Scenario& s) {
  Density skill = read_density(c, "skill");
  SignalKernel kernel = read_kernel(c);
  const UtilitySpec u = read_utility(c);
  const WageSpec w = read_wage(c);
  s.lambda_maj = read_lambda(c, 1.0);
  const CostSpec cost = read_cost(c, s.lambda_maj);
  std::optional<Interval> box;
  if (c.has("policy.lo") || c.has("policy.hi")) {
    box = keyed("policy", [&] { return Interval(c.get_number("policy.lo"), c.get_number("policy.hi")); });
  }
  s.cm = keyed("kernel", [&] { return ContinuousMarket(skill, kernel, u, w, cost, s.lambda_maj, box, s.tol); });
  s.reduced = threshold_reduction(*s.cm);

  SgdConfig& g = s.sgd;
  g.eta0 = read_positive(c, "sgd.eta0", g.eta0);
  g.n_outer = read_count(c, "sgd.n_outer", g.n_outer, 1);
  g.n_inner = read_count(c, "sgd.n_inner", g.n_inner, 1);
  g.rounds = read_count(c, "sgd.rounds", g.rounds, 0);
  g.theta0 = c.get_number("sgd.theta0", g.theta0);
  g.temperature = read_positive(c, "sgd.temperature", g.temperature);
  g.population = read_count(c, "sgd.population", g.population, 0);
  s.trials = read_count(c, "sgd.trials", s.trials, 1);
}

}  // namespace

Config resolve_presets(const Config& cfg) {
  std::set<std::string> seen;
  Config out = resolve_chain(cfg, seen);
  out.clear_used();
  return out;
}

Config load_config(const std::string& path_or_preset) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(path_or_preset, ec)) return resolve_presets(Config::load(path_or_preset));
  for (const auto& p : embedded_presets()) {
    if (p.first == path_or_preset) return resolve_presets(Config::parse(p.second));
  }
  throw ConfigError("config", "no such file or preset '" + path_or_preset + "'");
}

Scenario build_scenario(const Config& raw) {
  const Config c = resolve_presets(raw);
  Scenario s;
  s.config_hash = c.hash();
  s.name = c.get_string("name", "unnamed");
  s.model = read_model(c);
  s.seed = c.get_uint64("seed", 1);
  s.grid_n = read_count(c, "numerics.grid_n", 0, 0);
  s.tol = read_tolerances(c);
  s.starts = read_count(c, "equilibrium.starts", s.starts, 1);
  s.max_iters = read_count(c, "equilibrium.max_iters", s.max_iters, 1);
  s.rrm_tol = read_positive(c, "equilibrium.tol", s.tol.fixed_point_tol);
  if (s.model == ModelKind::continuous) {
    read_continuous(c, s);
  } else {
    read_threshold_market(c, s);
  }
  s.sgd.seed = s.seed;
  c.require_all_used();
  return s;
}

std::string axis_key(const Config& cfg, const std::string& axis) {
  if (axis.find('.') != std::string::npos) return axis;
  const bool continuous = cfg.has("model") && cfg.values().at("model").text == "continuous";
  if (axis == "a") return "utility.a";
  if (axis == "b") return "utility.b";
  if (axis == "alpha" || axis == "α") return "utility.alpha";
  if (axis == "lambda" || axis == "λ") return "market.lambda";
  if (axis == "w") return continuous ? "wage.w" : "market.wage";
  if (axis == "c") return "cost.c";
  if (axis == "c_maj") return "cost.c_maj";
  if (axis == "c_min") return "cost.c_min";
  if (axis == "p_plus") return "market.reward_pos";
  if (axis == "p_minus") return "market.penalty_neg";
  if (axis == "m_g") return "cost_cdf.hi";
  throw ConfigError("axis", "unknown axis '" + axis + "'");
}

void apply_axis(Config& cfg, const std::string& axis, double value) {
  const std::string key = axis_key(cfg, axis);
  if (key == "cost.c") {
    cfg.erase("cost.c_maj");
    cfg.erase("cost.c_min");
  } else if ((key == "cost.c_maj" || key == "cost.c_min") && cfg.has("cost.c")) {
    const ConfigValue shared = cfg.values().at("cost.c");
    cfg.erase("cost.c");
    cfg.set("cost.c_maj", shared);
    cfg.set("cost.c_min", shared);
  }
  cfg.set_number(key, value);
}

}  // namespace stratlabor
