#pragma once

// Scenario catalog: typed markets built from a Config, named presets, and
// sweep-axis aliases.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratlabor/coate_loury.hpp"
#include "stratlabor/config.hpp"
#include "stratlabor/continuous_market.hpp"
#include "stratlabor/rc_sgd.hpp"
#include "stratlabor/two_group.hpp"

namespace stratlabor {

enum class ModelKind { coate_loury, two_group, continuous };
std::string to_string(ModelKind k);

struct Scenario {
  std::string name;
  ModelKind model = ModelKind::coate_loury;
  std::uint64_t seed = 1;
  int grid_n = 0;  // 0: each solver's own default
  Tolerances tol;

  // coate-loury and two-group
  std::optional<CoateLouryMarket> cl;
  double lambda_maj = 1.0;

  // continuous
  std::optional<ContinuousMarket> cm;
  /// Equivalent threshold market when the continuous market has a binary
  /// skill outcome reached through a hinge cost.
  std::optional<CoateLouryMarket> reduced;

  int starts = 8;           // RRM starting points
  double rrm_tol = 1e-3;    // continuous RRM stopping distance
  int max_iters = 200;

  SgdConfig sgd;
  int trials = 10;

  std::string config_hash;
};

/// Names of the built-in presets, sorted.
std::vector<std::string> preset_names();
/// The preset's own text (before inheritance). Throws ConfigError("preset").
std::string preset_text(const std::string& name);

/// Replaces a top-level `preset = "name"` key by the named preset's keys
/// (recursively), with the config's own keys taking precedence.
Config resolve_presets(const Config& cfg);

/// A file path, or a preset name when no such file exists.
Config load_config(const std::string& path_or_preset);

/// Throws ConfigError naming the offending key for missing, invalid or
/// unknown keys.
Scenario build_scenario(const Config& cfg);

/// Config key that a sweep axis name refers to (a, b, w, c, c_maj, c_min,
/// alpha, lambda, p_plus, p_minus, m_g, or a full dotted key).
std::string axis_key(const Config& cfg, const std::string& axis);
/// Sets the axis to `value` (c overrides both group costs).
void apply_axis(Config& cfg, const std::string& axis, double value);

}  // namespace stratlabor
