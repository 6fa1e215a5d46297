#include "stratlabor/runners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "stratlabor/parallel.hpp"

namespace stratlabor {

using nlohmann::json;

void apply_options(Scenario& s, const RunOptions& opt) {
  if (opt.seed) {
    s.seed = *opt.seed;
    s.sgd.seed = *opt.seed;
  }
  if (opt.grid_n) {
    if (*opt.grid_n < 2) throw ConfigError("grid", "grid must be >= 2");
    s.grid_n = *opt.grid_n;
  }
}

std::string format_sig9(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

// ---------------------------------------------------------------- csv

CsvTable::CsvTable(std::vector<std::string> key_columns, std::vector<std::string> other_columns)
    : columns_(std::move(key_columns)) {
  std::sort(other_columns.begin(), other_columns.end());
  columns_.insert(columns_.end(), other_columns.begin(), other_columns.end());
}

void CsvTable::add(const std::map<std::string, std::string>& row) {
  std::vector<std::string> cells(columns_.size());
  for (const auto& [k, v] : row) {
    const auto it = std::find(columns_.begin(), columns_.end(), k);
    if (it == columns_.end()) throw std::invalid_argument("unknown CSV column '" + k + "'");
    cells[static_cast<std::size_t>(it - columns_.begin())] = v;
  }
  rows_.push_back(std::move(cells));
}

const std::string& CsvTable::cell(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns_.begin(), columns_.end(), column);
  if (it == columns_.end()) throw std::invalid_argument("unknown CSV column '" + column + "'");
  return rows_.at(row)[static_cast<std::size_t>(it - columns_.begin())];
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(cells[i]);
  }
  out += '\n';
}

}  // namespace

std::string CsvTable::str() const {
  std::string out;
  append_line(out, columns_);
  for (const auto& r : rows_) append_line(out, r);
  return out;
}

double empirical_quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  const double t = pos - static_cast<double>(i);
  return v[i] + t * (v[i + 1] - v[i]);
}

// ---------------------------------------------------------------- equilibria

double threshold_worker_welfare(const CoateLouryMarket& m, double theta) {
  const double premium = std::max(0.0, m.params.wage * (tpr(m, theta) - fpr(m, theta)));
  const double pi = m.cost.cdf(premium);
  const double income = m.params.wage * (pi * tpr(m, theta) + (1.0 - pi) * fpr(m, theta));
  const double top = std::min(premium, m.cost.upper_bound());
  const double spent = top > 0.0 ? integrate([&](double c) { return c * m.cost.pdf(c); }, Interval(0.0, top), m.tol)
                                 : 0.0;
  return income - spent;
}

namespace {

PolicyEval threshold_eval(const CoateLouryMarket& m, double lambda, const PolicyPair& pair) {
  PolicyEval e;
  e.pair = pair;
  e.qualified_maj = aggregate_response(m, pair.theta_maj);
  e.qualified_min = aggregate_response(m, pair.theta_min);
  e.qualified = lambda * e.qualified_maj + (1.0 - lambda) * e.qualified_min;
  e.gap = std::abs(e.qualified_maj - e.qualified_min);
  e.utility = lambda * perf_utility(m, pair.theta_maj) + (1.0 - lambda) * perf_utility(m, pair.theta_min);
  e.welfare_maj = threshold_worker_welfare(m, pair.theta_maj);
  e.welfare_min = threshold_worker_welfare(m, pair.theta_min);
  e.welfare = lambda * e.welfare_maj + (1.0 - lambda) * e.welfare_min;
  return e;
}

PolicyEval continuous_eval(const ContinuousMarket& m, const PolicyPair& pair) {
  const PolicyMetrics pm = evaluate_policy(m, pair);
  PolicyEval e;
  e.pair = pair;
  e.utility = pm.utility;
  e.welfare = pm.welfare;
  e.welfare_maj = pm.welfare_maj;
  e.welfare_min = pm.welfare_min;
  e.qualified = pm.qualified;
  e.qualified_maj = pm.qualified_maj;
  e.qualified_min = pm.qualified_min;
  e.gap = pm.gap;
  e.zero_profit = pm.zero_profit;
  return e;
}

// Stable and optimal pairs of a threshold market, single group when lambda = 1.
void threshold_sets(const CoateLouryMarket& m, double lambda, int grid_n, std::vector<PolicyPair>& stable,
                    std::vector<PolicyPair>& optimal, bool& unique) {
  const int stable_grid = grid_n > 0 ? grid_n : 256;
  const int opt_grid = grid_n > 0 ? std::max(grid_n, 64) : 1024;
  const OptimalResult opt = find_optimal(m, opt_grid);
  unique = opt.unique;
  if (lambda >= 1.0) {
    for (double t : enumerate_stable(m, stable_grid)) stable.push_back({t, t});
    for (const Extremum& e : opt.optimal_set) optimal.push_back({e.arg, e.arg});
  } else {
    const TwoGroupMarket tg{m, lambda};
    stable = stable_pairs(tg, stable_grid);
    optimal = optimal_pairs(tg, opt_grid);
  }
}

std::string what_of(const std::exception& e) { return e.what(); }

}  // namespace

EquilibriumSolution solve_equilibrium(const Scenario& s, int threads) {
  EquilibriumSolution out;
  const int starts = std::max(1, s.starts);
  out.runs.resize(static_cast<std::size_t>(starts));

  if (s.cl) {
    const CoateLouryMarket& m = *s.cl;
    for (int k = 0; k < starts; ++k) {
      auto& run = out.runs[static_cast<std::size_t>(k)];
      const double t0 = (k + 0.5) / starts;
      run.start = {t0, t0};
      try {
        const RrmResult r = rrm_run(m, t0, s.max_iters);
        for (double t : r.trajectory) run.path.push_back({t, t});
        run.converged = r.converged;
      } catch (const std::exception& e) {
        run.error = what_of(e);
      }
    }
    std::vector<PolicyPair> stable, optimal;
    try {
      threshold_sets(m, s.lambda_maj, s.grid_n, stable, optimal, out.optimal_unique);
    } catch (const std::exception& e) {
      out.stable_error = out.optimal_error = what_of(e);
    }
    for (const auto& p : stable) out.stable.push_back(threshold_eval(m, s.lambda_maj, p));
    for (const auto& p : optimal) out.optimal.push_back(threshold_eval(m, s.lambda_maj, p));
    return out;
  }

  const ContinuousMarket& m = *s.cm;
  const Interval& box = m.policy_box();
  parallel_for(static_cast<std::size_t>(starts), threads, [&](std::size_t k) {
    auto& run = out.runs[k];
    const double t0 = box.lo + (static_cast<double>(k) + 0.5) / starts * box.width();
    run.start = {t0, t0};
    try {
      const ContinuousStable r = find_stable_continuous(m, run.start, s.rrm_tol, s.max_iters);
      run.path = r.trajectory;
      run.converged = r.converged;
    } catch (const std::exception& e) {
      run.error = what_of(e);
    }
  });

  std::vector<PolicyPair> stable, optimal;
  if (s.reduced) {
    try {
      threshold_sets(*s.reduced, m.lambda_maj(), s.grid_n, stable, optimal, out.optimal_unique);
    } catch (const std::exception& e) {
      out.stable_error = out.optimal_error = what_of(e);
    }
  } else {
    for (const auto& run : out.runs) {
      if (!run.converged || run.path.empty()) continue;
      const PolicyPair p = run.path.back();
      const bool seen = std::any_of(stable.begin(), stable.end(), [&](const PolicyPair& q) {
        return std::abs(q.theta_maj - p.theta_maj) < 1e-2 && std::abs(q.theta_min - p.theta_min) < 1e-2;
      });
      if (!seen) stable.push_back(p);
    }
    std::sort(stable.begin(), stable.end(), [](const PolicyPair& a, const PolicyPair& b) {
      return a.theta_maj != b.theta_maj ? a.theta_maj < b.theta_maj : a.theta_min < b.theta_min;
    });
    if (stable.empty()) out.stable_error = "no repeated-best-response run converged";
    try {
      optimal.push_back(find_optimal_continuous(m, s.grid_n > 0 ? s.grid_n : 64, stable).pair);
    } catch (const std::exception& e) {
      out.optimal_error = what_of(e);
    }
  }
  out.stable.resize(stable.size());
  out.optimal.resize(optimal.size());
  std::vector<std::string> errs(stable.size() + optimal.size());
  parallel_for(errs.size(), threads, [&](std::size_t i) {
    try {
      if (i < stable.size()) {
        out.stable[i] = continuous_eval(m, stable[i]);
      } else {
        out.optimal[i - stable.size()] = continuous_eval(m, optimal[i - stable.size()]);
      }
    } catch (const std::exception& e) {
      errs[i] = what_of(e);
    }
  });
  for (std::size_t i = 0; i < errs.size(); ++i) {
    if (errs[i].empty()) continue;
    std::string& slot = i < stable.size() ? out.stable_error : out.optimal_error;
    if (slot.empty()) slot = errs[i];
  }
  return out;
}

namespace {

json pair_json(const PolicyPair& p) { return json::array({p.theta_maj, p.theta_min}); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json eval_json(const PolicyEval& e, bool single) {
  json j;
  if (single) {
    j["theta"] = e.pair.theta_maj;
  } else {
    j["theta_maj"] = e.pair.theta_maj;
    j["theta_min"] = e.pair.theta_min;
    j["qualified_maj"] = e.qualified_maj;
    j["qualified_min"] = e.qualified_min;
    j["welfare_maj"] = e.welfare_maj;
    j["welfare_min"] = e.welfare_min;
    j["gap"] = e.gap;
  }
  j["qualified"] = e.qualified;
  j["utility"] = e.utility;
  j["welfare"] = e.welfare;
  if (std::isfinite(e.zero_profit)) j["zero_profit_residual"] = e.zero_profit;
  return j;
}

json check_json(const TheoremCheck& c) { return json{{"verdict", to_string(c.verdict)}, {"detail", c.detail}}; }

json diagnostics_json(const CoateLouryMarket& m, int grid_n) {
  const TheoremDiagnostics d = diagnose(m, grid_n > 0 ? std::max(grid_n, 64) : 512);
  return json{{"delta1", d.delta1},
              {"delta1_arg", d.delta1_arg},
              {"delta2", d.delta2},
              {"epsilon_sep", d.epsilon_sep},
              {"cost_upper", d.cost_upper},
              {"lipschitz_c", d.lipschitz_c},
              {"concavity_gamma", d.concavity_gamma},
              {"concavity_pi_max", d.concavity_pi_max},
              {"k1", number_or_null(d.k1)},
              {"k2", number_or_null(d.k2)},
              {"rrm_sensitivity", number_or_null(d.rrm_sensitivity)},
              {"rrm_map_slope", number_or_null(d.rrm_map_slope)},
              {"wage_window", json::array({number_or_null(d.wage_window_lo), number_or_null(d.wage_window_hi)})},
              {"differentiable", d.differentiable},
              {"welfare_high_wage", check_json(d.thm_welfare_high_wage)},
              {"welfare_low_wage", check_json(d.thm_welfare_low_wage)},
              {"equity_high_wage", check_json(d.thm_equity_high_wage)},
              {"equity_low_wage", check_json(d.thm_equity_low_wage)},
              {"rrm_contraction", check_json(d.rrm_contraction)}};
}

}  // namespace

json run_equilibrium(const Scenario& s, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const EquilibriumSolution sol = solve_equilibrium(s, opt.threads);
  const bool single = s.lambda_maj >= 1.0;
  json report;
  report["scenario"] = s.name;
  report["model"] = to_string(s.model);
  report["config_hash"] = s.config_hash;
  report["seed"] = s.seed;

  json errors = json::array();
  json runs = json::array();
  for (const auto& r : sol.runs) {
    json path = json::array();
    for (const auto& p : r.path) path.push_back(single ? json(p.theta_maj) : pair_json(p));
    json j{{"start", single ? json(r.start.theta_maj) : pair_json(r.start)},
           {"path", path},
           {"converged", r.converged},
           {"iterations", r.path.empty() ? 0 : r.path.size() - 1}};
    if (!r.error.empty()) {
      j["error"] = r.error;
      errors.push_back("rrm: " + r.error);
    }
    runs.push_back(j);
  }
  report["trajectories"] = runs;

  json stable = json::array();
  for (const auto& e : sol.stable) stable.push_back(eval_json(e, single));
  report["stable"] = stable;
  json optimal = json::array();
  for (const auto& e : sol.optimal) optimal.push_back(eval_json(e, single));
  report["optimal"] = optimal;
  if (!sol.stable_error.empty()) errors.push_back("stable: " + sol.stable_error);
  if (!sol.optimal_error.empty() && sol.optimal_error != sol.stable_error) {
    errors.push_back("optimal: " + sol.optimal_error);
  }

  json diag;
  try {
    if (s.cl) diag = diagnostics_json(*s.cl, s.grid_n);
    if (s.reduced) diag = diagnostics_json(*s.reduced, s.grid_n);
  } catch (const std::exception& e) {
    errors.push_back(std::string("diagnostics: ") + e.what());
  }
  if (diag.is_null()) diag = json::object();
  diag["optimal_unique"] = sol.optimal_unique;
  double best_opt = -std::numeric_limits<double>::infinity();
  for (const auto& e : sol.optimal) best_opt = std::max(best_opt, e.utility);
  bool dominates = !sol.optimal.empty();
  double max_gap = 0.0;
  for (const auto& e : sol.stable) {
    dominates = dominates && best_opt >= e.utility - 1e-9 * std::max(1.0, std::abs(e.utility));
    max_gap = std::max(max_gap, e.gap);
  }
  diag["optimal_dominates_stable"] = dominates;
  diag["max_stable_gap"] = max_gap;
  if (s.cm) diag["rrm_tol"] = s.rrm_tol;
  report["diagnostics"] = diag;
  report["errors"] = errors;
  report["wall_time_seconds"] =
      std::round(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() * 1000.0) / 1000.0;
  return report;
}

// ---------------------------------------------------------------- sweep

namespace {

const std::vector<std::string> kSweepKeys{"scenario", "axis_value", "policy_type"};
const std::vector<std::string> kSweepColumns{"axis",        "error",         "gap",         "index",
                                             "qualified",   "qualified_maj", "qualified_min", "theta_maj",
                                             "theta_min",   "utility",       "welfare",     "welfare_maj",
                                             "welfare_min", "zero_profit"};

std::map<std::string, std::string> eval_row(const PolicyEval& e) {
  return {{"gap", format_sig9(e.gap)},
          {"qualified", format_sig9(e.qualified)},
          {"qualified_maj", format_sig9(e.qualified_maj)},
          {"qualified_min", format_sig9(e.qualified_min)},
          {"theta_maj", format_sig9(e.pair.theta_maj)},
          {"theta_min", format_sig9(e.pair.theta_min)},
          {"utility", format_sig9(e.utility)},
          {"welfare", format_sig9(e.welfare)},
          {"welfare_maj", format_sig9(e.welfare_maj)},
          {"welfare_min", format_sig9(e.welfare_min)},
          {"zero_profit", format_sig9(e.zero_profit)}};
}

}  // namespace

CsvTable run_sweep(const Config& cfg, const std::string& axis, const std::vector<double>& values,
                   const RunOptions& opt) {
  const Config base = resolve_presets(cfg);
  const std::string key = axis_key(base, axis);
  Scenario probe = build_scenario(base);
  apply_options(probe, opt);

  struct Outcome {
    std::string name;
    std::string error;
    EquilibriumSolution sol;
  };
  std::vector<Outcome> out(values.size());
  parallel_for(values.size(), opt.threads, [&](std::size_t i) {
    Outcome& o = out[i];
    o.name = probe.name;
    try {
      Config c = base;
      apply_axis(c, axis, values[i]);
      Scenario s = build_scenario(c);
      apply_options(s, opt);
      o.sol = solve_equilibrium(s, 1);
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });

  CsvTable table(kSweepKeys, kSweepColumns);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Outcome& o = out[i];
    const std::map<std::string, std::string> common{
        {"scenario", o.name}, {"axis_value", format_sig9(values[i])}, {"axis", key}};
    auto emit = [&](const std::string& type, const std::vector<PolicyEval>& evals, const std::string& err) {
      if (!o.error.empty() || evals.empty()) {
        auto row = common;
        row["policy_type"] = type;
        row["error"] = !o.error.empty() ? o.error : (err.empty() ? "none found" : err);
        table.add(row);
        return;
      }
      for (std::size_t k = 0; k < evals.size(); ++k) {
        auto row = common;
        for (auto& [c, v] : eval_row(evals[k])) row[c] = v;
        row["policy_type"] = type;
        row["index"] = std::to_string(k);
        row["error"] = err;
        table.add(row);
      }
    };
    emit("stable", o.sol.stable, o.sol.stable_error);
    emit("optimal", o.sol.optimal, o.sol.optimal_error);
  }
  return table;
}

// ---------------------------------------------------------------- sgd

CsvTable run_sgd(const Scenario& s, const RunOptions& opt) {
  if (!s.cm) throw ConfigError("model", "training runs need a continuous market");
  const ContinuousMarket& m = *s.cm;
  std::optional<ResponseModel> model;
  try {
    model.emplace(m);
  } catch (const DomainError& e) {
    throw ConfigError(m.wages().kind == WageSpec::Kind::flat ? "kernel.family" : "wage.kind", e.what());
  }
  const LossSpec loss = LossSpec::negative_utility(m.utility());
  const int trials = s.trials;
  const int rounds = s.sgd.rounds;

  std::vector<std::string> cols{"loss_mean", "theta_mean", "theta_p05", "theta_p95",
                                "utility_mean", "utility_p05", "utility_p95"};
  const int width = std::max(2, static_cast<int>(std::to_string(std::max(trials - 1, 0)).size()));
  auto trial_name = [&](int k) {
    std::string n = std::to_string(k);
    return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(n.size()))), '0') + n;
  };
  for (int k = 0; k < trials; ++k) {
    cols.push_back("theta_trial_" + trial_name(k));
    cols.push_back("utility_trial_" + trial_name(k));
  }
  CsvTable table({"scenario", "round", "mode"}, cols);
  if (rounds == 0) return table;

  const SgdMode modes[2] = {SgdMode::performative, SgdMode::naive};
  std::vector<SgdTrajectory> runs(static_cast<std::size_t>(2 * trials));
  parallel_for(runs.size(), opt.threads, [&](std::size_t i) {
    SgdConfig cfg = s.sgd;
    cfg.stream = i % static_cast<std::size_t>(trials);
    cfg.threads = 1;
    runs[i] = rsgd_run(*model, loss, cfg, modes[i / static_cast<std::size_t>(trials)]);
  });

  std::set<double> thetas;
  for (const auto& r : runs) thetas.insert(r.theta.begin(), r.theta.end());
  const std::vector<double> tv(thetas.begin(), thetas.end());
  std::vector<double> uv(tv.size());
  parallel_for(tv.size(), opt.threads, [&](std::size_t i) { uv[i] = employer_perf_utility(m, {tv[i], tv[i]}); });
  auto utility_of = [&](double t) {
    return uv[static_cast<std::size_t>(std::lower_bound(tv.begin(), tv.end(), t) - tv.begin())];
  };

  for (int mi = 0; mi < 2; ++mi) {
    for (int r = 0; r <= rounds; ++r) {
      std::map<std::string, std::string> row{
          {"scenario", s.name}, {"round", std::to_string(r)}, {"mode", mi == 0 ? "performative" : "naive"}};
      std::vector<double> th, ut, ls;
      for (int k = 0; k < trials; ++k) {
        const SgdTrajectory& run = runs[static_cast<std::size_t>(mi * trials + k)];
        const double t = run.theta[static_cast<std::size_t>(r)];
        th.push_back(t);
        ut.push_back(utility_of(t));
        if (r > 0) ls.push_back(run.loss_estimate[static_cast<std::size_t>(r - 1)]);
        row["theta_trial_" + trial_name(k)] = format_sig9(t);
        row["utility_trial_" + trial_name(k)] = format_sig9(ut.back());
      }
      auto mean = [](const std::vector<double>& v) {
        double a = 0.0;
        for (double x : v) a += x;
        return v.empty() ? std::numeric_limits<double>::quiet_NaN() : a / static_cast<double>(v.size());
      };
      row["theta_mean"] = format_sig9(mean(th));
      row["theta_p05"] = format_sig9(empirical_quantile(th, 0.05));
      row["theta_p95"] = format_sig9(empirical_quantile(th, 0.95));
      row["utility_mean"] = format_sig9(mean(ut));
      row["utility_p05"] = format_sig9(empirical_quantile(ut, 0.05));
      row["utility_p95"] = format_sig9(empirical_quantile(ut, 0.95));
      row["loss_mean"] = format_sig9(mean(ls));
      table.add(row);
    }
  }
  return table;
}

}  // namespace stratlabor
