// strategic-labor: equilibrium reports, parameter sweeps, training runs and
// the acceptance suite.

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stratlabor/acceptance.hpp"
#include "stratlabor/parallel.hpp"
#include "stratlabor/runners.hpp"

using namespace stratlabor;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfigError = 2;

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= list.size() && !list.empty()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string item = list.substr(pos, comma - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    const char* b = item.data();
    const char* e = b + item.size();
    if (b != e && *b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    if (item.empty() || r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) {
      throw ConfigError("values", "not a number: '" + item + "'");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("out", "cannot write '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategic labor-market simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::optional<int> threads;
  app.add_option("--seed", seed, "Random seed (overrides the config)");
  app.add_option("--grid", grid, "Grid size for policy scans")->check(CLI::Range(2, 1 << 20));
  app.add_option("--threads", threads, "Worker threads (default: STRATEGIC_LABOR_THREADS or all cores)")
      ->check(CLI::Range(1, 4096));

  std::string config_path, out_path, axis, values;

  auto* eq = app.add_subcommand("equilibrium", "Stable and optimal policies with diagnostics (JSON)");
  eq->add_option("--config", config_path, "Config file or preset name")->required();
  eq->add_option("--out", out_path, "Report path (default: stdout)");

  auto* sweep = app.add_subcommand("sweep", "Stable and optimal policies along one parameter (CSV)");
  sweep->add_option("--config", config_path, "Config file or preset name")->required();
  sweep->add_option("--axis", axis, "Parameter name (a, b, alpha, lambda, w, c, c_maj, c_min, ...)")->required();
  sweep->add_option("--values", values, "Comma-separated values (may be empty)")->required()->expected(0, 1);
  sweep->add_option("--out", out_path, "CSV path (default: stdout)");

  auto* sgd = app.add_subcommand("sgd", "Performative and naive SGD trajectories (CSV)");
  sgd->add_option("--config", config_path, "Config file or preset name")->required();
  sgd->add_option("--out", out_path, "CSV path (default: stdout)");

  std::optional<double> quad_tol;
  std::vector<std::string> only;
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--out", out_path, "Summary JSON path");
  verify->add_option("--quad-tol", quad_tol, "Quadrature tolerance for every market in the suite");
  verify->add_option("--only", only, "Criteria to run")->delimiter(',');

  auto* presets = app.add_subcommand("presets", "List built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    RunOptions opt;
    opt.seed = seed;
    opt.grid_n = grid;
    opt.threads = resolve_threads(threads);

    if (*presets) {
      for (const auto& n : preset_names()) std::cout << n << "\n";
      return kOk;
    }
    if (*eq) {
      Scenario s = build_scenario(load_config(config_path));
      apply_options(s, opt);
      const nlohmann::json report = run_equilibrium(s, opt);
      write_text(out_path, report.dump(2) + "\n");
      return report["errors"].empty() ? kOk : kFailed;
    }
    if (*sweep) {
      const std::vector<double> vals = parse_values(values);
      write_text(out_path, run_sweep(load_config(config_path), axis, vals, opt).str());
      return kOk;
    }
    if (*sgd) {
      Scenario s = build_scenario(load_config(config_path));
      apply_options(s, opt);
      write_text(out_path, run_sgd(s, opt).str());
      return kOk;
    }
    if (*verify) {
      VerifyOptions v;
      v.seed = seed;
      v.quad_tol = quad_tol;
      v.threads = opt.threads;
      v.only = only;
      const auto results =
          run_acceptance(v, [](const CriterionResult& r) { std::cout << format_result_line(r) << std::endl; });
      const nlohmann::json summary = acceptance_summary(results, v);
      if (!out_path.empty()) write_text(out_path, summary.dump(2) + "\n");
      std::cout << summary["total"].get<int>() - summary["failed"].get<int>() << "/" << summary["total"]
                << " criteria passed\n";
      return summary["passed"].get<bool>() ? kOk : kFailed;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}
