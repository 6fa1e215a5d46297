#include <string>

#include "doctest.h"
#include "stratlabor/scenario.hpp"

using namespace stratlabor;

namespace {

std::string error_key(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("parse sections, comments and quoted strings") {
  const Config c = Config::parse(
      "name = \"a \\\"b\\\" c\"  # trailing\n"
      "; comment\n"
      "seed = 7\n"
      "[market]\n"
      "wage = 5   # five\n"
      "[kernel.skilled]\n"
      "family = \"power\"\n");
  CHECK(c.get_string("name") == "a \"b\" c");
  CHECK(c.get_int("seed") == 7);
  CHECK(c.get_number("market.wage") == 5.0);
  CHECK(c.get_string("kernel.skilled.family") == "power");
  CHECK(c.values().size() == 4);
}

TEST_CASE("parse errors name the key or line") {
  CHECK(error_key([] { Config::parse("a = 1\na = 2\n"); }) == "a");
  CHECK(error_key([] { Config::parse("[s]\nx =\n"); }) == "s.x");
  CHECK(error_key([] { Config::parse("x = \"open\n"); }) == "line 1");
  CHECK(error_key([] { Config::parse("\njust text\n"); }) == "line 2");
  CHECK(error_key([] { Config::parse("[broken\n"); }) == "line 1");
}

TEST_CASE("typed getters reject bad values") {
  const Config c = Config::parse("n = abc\nq = \"3\"\nf = 1.5\nb = yes\n");
  CHECK(error_key([&] { c.get_number("n"); }) == "n");
  CHECK(error_key([&] { c.get_number("q"); }) == "q");
  CHECK(error_key([&] { c.get_int("f"); }) == "f");
  CHECK(error_key([&] { c.get_bool("b", false); }) == "b");
  CHECK(error_key([&] { c.get_number("missing"); }) == "missing");
  CHECK(c.get_number("missing", 2.5) == 2.5);
}

TEST_CASE("unused keys are reported") {
  const Config c = Config::parse("a = 1\n[s]\nb = 2\n");
  c.get_number("a");
  CHECK(error_key([&] { c.require_all_used(); }) == "s.b");
  c.get_number("s.b");
  CHECK_NOTHROW(c.require_all_used());
}

TEST_CASE("hash is the git blob id of the canonical text") {
  // Reference ids from `git hash-object`.
  CHECK(Config().hash() == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  const Config c = Config::parse("a = 1\n[s]\nb = \"x\"\n");
  CHECK(c.serialize() == "a = 1\n\n[s]\nb = \"x\"\n");
  CHECK(c.hash() == "00590a27bb66812fafaa9fea47ea7060fcd13b19");
  // Key order and formatting do not matter.
  CHECK(Config::parse("a=1\n[s]\nb=\"x\"   # c\n").hash() == c.hash());
  CHECK(Config::parse("a = 2\n[s]\nb = \"x\"\n").hash() != c.hash());
  CHECK(Config::parse("[t]\nz = 1\n[s]\nb = 2\n").hash() == Config::parse("[s]\nb = 2\n[t]\nz = 1\n").hash());
}

TEST_CASE("every preset round-trips and builds") {
  const auto names = preset_names();
  REQUIRE(names.size() >= 10);
  CHECK(std::is_sorted(names.begin(), names.end()));
  for (const auto& n : names) {
    CAPTURE(n);
    const Config raw = Config::parse(preset_text(n));
    const Config again = Config::parse(raw.serialize());
    CHECK(again == raw);
    CHECK(again.serialize() == raw.serialize());
    CHECK(again.hash() == raw.hash());

    const Config resolved = load_config(n);
    CHECK(Config::parse(resolved.serialize()) == resolved);
    const Scenario s = build_scenario(resolved);
    CHECK(s.name == n);
    CHECK(s.config_hash == resolved.hash());
    CHECK((s.cl.has_value() || s.cm.has_value()));
  }
}

TEST_CASE("preset inheritance") {
  const Config c = resolve_presets(Config::parse("preset = \"linear-base\"\n[cost]\nc = 9\n"));
  CHECK(!c.has("preset"));
  CHECK(c.get_number("cost.c") == 9.0);
  CHECK(c.get_number("utility.a") == 2.0);
  CHECK(error_key([] { resolve_presets(Config::parse("preset = \"no-such\"\n")); }) == "preset");
  CHECK(error_key([] { load_config("no-such-file-or-preset"); }) == "config");
}

TEST_CASE("scenario errors name the offending key") {
  auto build = [](const std::string& extra) {
    return [extra] { build_scenario(Config::parse("preset = \"linear-base\"\n" + extra)); };
  };
  CHECK(error_key(build("[cost]\nc = -1\n")) == "cost.c");
  CHECK(error_key(build("[kernel]\nfamily = \"cauchy\"\n")) == "kernel.family");
  CHECK(error_key(build("[utility]\nspeed = 3\n")) == "utility.speed");
  CHECK(error_key(build("[wage]\nkind = \"bonus\"\n")) == "wage.kind");
  CHECK(error_key(build("[market]\nlambda = 1.5\n")) == "market.lambda");
  CHECK(error_key(build("[numerics]\nquad_tol = 0\n")) == "numerics.quad_tol");
  CHECK(error_key([] { build_scenario(Config::parse("model = \"fluid\"\n")); }) == "model");
}

TEST_CASE("sweep axes") {
  Config c = load_config("linear-flat");
  CHECK(axis_key(c, "a") == "utility.a");
  CHECK(axis_key(c, "alpha") == "utility.alpha");
  CHECK(axis_key(c, "w") == "wage.w");
  CHECK(axis_key(c, "utility.b") == "utility.b");
  CHECK(error_key([&] { axis_key(c, "zeta"); }) == "axis");

  apply_axis(c, "a", 6.0);
  CHECK(c.get_number("utility.a") == 6.0);
  apply_axis(c, "c", 3.0);
  const Scenario s = build_scenario(c);
  CHECK(s.cm->cost().c_maj == 3.0);
  CHECK(s.cm->cost().c_min == 3.0);

  Config t = load_config("thm31-demo");
  CHECK(axis_key(t, "w") == "market.wage");
  apply_axis(t, "p_plus", 20.0);
  CHECK(build_scenario(t).cl->params.reward_pos == 20.0);
}

TEST_CASE("binary hinge market reduces to a threshold market") {
  const Scenario s = build_scenario(load_config("fairness-linear"));
  REQUIRE(s.reduced.has_value());
  // Reaching the cutoff from skill y costs c (cutoff - y), uniform on [0, c (cutoff - lo)].
  CHECK(s.reduced->cost.upper_bound() == doctest::Approx(1.0));
  CHECK(s.reduced->params.wage == 5.0);
  CHECK(!build_scenario(load_config("linear-base")).reduced.has_value());
}
