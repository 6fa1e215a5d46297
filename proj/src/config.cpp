#include "stratlabor/config.hpp"

#include <boost/uuid/detail/sha1.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stratlabor/errors.hpp"

namespace stratlabor {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const char c = k[i];
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    if (c == '.' && i + 1 < k.size() && k[i + 1] == '.') return false;
  }
  return true;
}

std::string line_key(int n) { return "line " + std::to_string(n); }

// Reads a quoted string starting at s[0] == '"'; returns the rest of the line.
std::string_view read_quoted(std::string_view s, std::string& out, int line) {
  out.clear();
  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') return s.substr(i + 1);
    if (c == '\\') {
      if (++i >= s.size()) break;
      switch (s[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: throw ConfigError(line_key(line), "unknown escape in string");
      }
    } else {
      out += c;
    }
  }
  throw ConfigError(line_key(line), "unterminated string");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Config Config::parse(std::string_view text) {
  Config cfg;
  std::string section;
  int line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      const std::size_t close = line.find(']');
      if (close == std::string_view::npos) throw ConfigError(line_key(line_no), "missing ']' in section header");
      const std::string_view rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') throw ConfigError(line_key(line_no), "text after section header");
      const std::string_view name = trim(line.substr(1, close - 1));
      if (!name.empty() && !valid_key(name)) {
        throw ConfigError(std::string(name), "invalid section name");
      }
      section = std::string(name);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_key(line_no), "expected key = value");
    const std::string_view k = trim(line.substr(0, eq));
    if (!valid_key(k)) throw ConfigError(line_key(line_no), "invalid key '" + std::string(k) + "'");
    const std::string key = section.empty() ? std::string(k) : section + "." + std::string(k);
    std::string_view rhs = trim(line.substr(eq + 1));
    ConfigValue v;
    if (!rhs.empty() && rhs.front() == '"') {
      rhs = trim(read_quoted(rhs, v.text, line_no));
      if (!rhs.empty() && rhs.front() != '#') throw ConfigError(key, "text after quoted value");
      v.quoted = true;
    } else {
      const std::size_t hash = rhs.find('#');
      v.text = std::string(trim(rhs.substr(0, hash)));
      if (v.text.empty()) throw ConfigError(key, "missing value");
    }
    if (cfg.values_.count(key)) throw ConfigError(key, "duplicate key");
    cfg.values_.emplace(key, std::move(v));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

std::string Config::serialize() const {
  // Group by section (everything before the last dot), keys sorted.
  std::map<std::string, std::vector<std::pair<std::string, const ConfigValue*>>> sections;
  for (const auto& [k, v] : values_) {
    const std::size_t dot = k.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : k.substr(0, dot);
    const std::string name = dot == std::string::npos ? k : k.substr(dot + 1);
    sections[sec].emplace_back(name, &v);
  }
  std::string out;
  bool first = true;
  for (const auto& [sec, entries] : sections) {
    if (!sec.empty()) {
      if (!first) out += '\n';
      out += "[" + sec + "]\n";
    }
    first = false;
    for (const auto& [name, v] : entries) out += name + " = " + (v->quoted ? quote(v->text) : v->text) + "\n";
  }
  return out;
}

std::string Config::hash() const {
  const std::string body = serialize();
  const std::string blob = "blob " + std::to_string(body.size()) + '\0' + body;
  boost::uuids::detail::sha1 h;
  h.process_bytes(blob.data(), blob.size());
  boost::uuids::detail::sha1::digest_type d;
  h.get_digest(d);
  char buf[41];
  for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", d[i]);
  return std::string(buf, 40);
}

void Config::set_number(const std::string& key, double v) { set(key, ConfigValue{format_number(v), false}); }

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

const ConfigValue& Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "missing required key");
  used_.insert(key);
  return it->second;
}

std::string Config::get_string(const std::string& key) const { return find(key).text; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_number(const std::string& key) const {
  const ConfigValue& v = find(key);
  double out = 0.0;
  const char* end = v.text.data() + v.text.size();
  const char* start = v.text.data();
  if (!v.text.empty() && *start == '+') ++start;
  const auto r = std::from_chars(start, end, out);
  if (v.quoted || r.ec != std::errc() || r.ptr != end || !std::isfinite(out)) {
    throw ConfigError(key, "expected a finite number, got '" + v.text + "'");
  }
  return out;
}

double Config::get_number(const std::string& key, double fallback) const {
  return has(key) ? get_number(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  const double v = get_number(key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw ConfigError(key, "expected an integer, got '" + find(key).text + "'");
  }
  return static_cast<std::int64_t>(v);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const ConfigValue& v = find(key);
  std::uint64_t out = 0;
  const char* end = v.text.data() + v.text.size();
  const auto r = std::from_chars(v.text.data(), end, out);
  if (v.quoted || r.ec != std::errc() || r.ptr != end) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + v.text + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const ConfigValue& v = find(key);
  if (!v.quoted && v.text == "true") return true;
  if (!v.quoted && v.text == "false") return false;
  throw ConfigError(key, "expected true or false, got '" + v.text + "'");
}

void Config::require_all_used() const {
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) throw ConfigError(k, "unknown key");
  }
}

}  // namespace stratlabor
