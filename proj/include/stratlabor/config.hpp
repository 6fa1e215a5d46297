#pragma once

// Nested key-value configuration files.
//
//   # comment
//   [section.sub]
//   key = 1.5            # numbers and bare words are scalars
//   name = "a string"    # quoted strings may use \" \\ \n \t escapes
//
// Keys are stored flattened ("section.sub.key"). Parsing then serializing
// yields a canonical text (sections and keys sorted) that parses back to an
// equal Config; the hash is the git blob hash of that text.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace stratlabor {

struct ConfigValue {
  std::string text;
  bool quoted = false;

  friend bool operator==(const ConfigValue&, const ConfigValue&) = default;
};

class Config {
 public:
  Config() = default;

  /// Throws ConfigError (key = "line N" or the duplicated key) on bad syntax.
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  std::string serialize() const;
  /// 40 hex digits.
  std::string hash() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }
  void set(const std::string& key, ConfigValue v) { values_[key] = std::move(v); }
  void set_number(const std::string& key, double v);
  void set_string(const std::string& key, const std::string& v) { set(key, ConfigValue{v, true}); }
  void erase(const std::string& key) { values_.erase(key); }
  /// Keys of `other` override ours.
  void merge(const Config& other);

  // Typed reads. Each marks the key as used; a missing key or an unparsable
  // value throws ConfigError naming the key.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key) const;
  double get_number(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ConfigError naming the first key never read.
  void require_all_used() const;
  void clear_used() const { used_.clear(); }

  friend bool operator==(const Config& a, const Config& b) { return a.values_ == b.values_; }

 private:
  const ConfigValue& find(const std::string& key) const;

  std::map<std::string, ConfigValue> values_;
  mutable std::set<std::string> used_;
};

/// Shortest text that reads back to exactly `v`.
std::string format_number(double v);

}  // namespace stratlabor
