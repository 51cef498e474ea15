#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iml/core.hpp"

namespace iml::cli {

// Invalid configuration. `line` is 0 when the problem is not tied to a line
// (for example a required key that is missing).
class ConfigError : public Error {
 public:
  ConfigError(std::string source, int line, std::string key, const std::string& message);

  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

// Flat `key = value` text. Keys are dotted lowercase identifiers, `#` starts a
// comment line, blank lines are ignored, duplicate keys are rejected.
class Config {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  Config() = default;
  static Config parse(std::string_view text, std::string source = "<config>");
  static Config load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
  int line_of(std::string_view key) const;

  std::string get_string(std::string_view key, std::string_view fallback) const;
  std::string require(std::string_view key) const;
  long long get_int(std::string_view key, long long fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::optional<std::uint64_t> get_u64(std::string_view key) const;

  // Entries whose key starts with `prefix`, keyed by the remainder.
  std::map<std::string, std::string> with_prefix(std::string_view prefix) const;

  // Every key must be listed in `keys` or start with one of `prefixes`.
  void check_keys(const std::vector<std::string_view>& keys,
                  const std::vector<std::string_view>& prefixes) const;

  [[noreturn]] void fail(std::string_view key, const std::string& message) const;

  void set(std::string key, std::string value);

 private:
  std::string source_ = "<config>";
  std::vector<Entry> entries_;
};

}  // namespace iml::cli
