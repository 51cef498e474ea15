#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace iml::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
  });
}

std::string where(const std::string& source, int line) {
  return line > 0 ? source + ":" + std::to_string(line) : source;
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, std::string key, const std::string& message)
    : Error(where(source, line) + ": " + (key.empty() ? "" : "key '" + key + "': ") + message),
      line_(line),
      key_(std::move(key)) {}

Config Config::parse(std::string_view text, std::string source) {
  Config cfg;
  cfg.source_ = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(cfg.source_, line_no, "", "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!valid_key(key)) throw ConfigError(cfg.source_, line_no, key, "invalid key name");
    if (value.empty()) throw ConfigError(cfg.source_, line_no, key, "empty value");
    if (cfg.has(key)) {
      throw ConfigError(cfg.source_, line_no, key,
                        "duplicate key (first set on line " + std::to_string(cfg.line_of(key)) + ")");
    }
    cfg.entries_.push_back({key, value, line_no});
    if (end == text.size()) break;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot read config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool Config::has(std::string_view key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
}

std::optional<std::string> Config::get(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return e.value;
  }
  return std::nullopt;
}

int Config::line_of(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return e.line;
  }
  return 0;
}

std::string Config::get_string(std::string_view key, std::string_view fallback) const {
  return get(key).value_or(std::string(fallback));
}

std::string Config::require(std::string_view key) const {
  auto v = get(key);
  if (!v) fail(key, "required key is missing");
  return *v;
}

long long Config::get_int(std::string_view key, long long fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) fail(key, "expected an integer, got '" + *v + "'");
  return out;
}

double Config::get_double(std::string_view key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) fail(key, "expected a number, got '" + *v + "'");
  return out;
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  fail(key, "expected true or false, got '" + *v + "'");
}

std::optional<std::uint64_t> Config::get_u64(std::string_view key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    fail(key, "expected an unsigned 64-bit integer, got '" + *v + "'");
  }
  return out;
}

std::map<std::string, std::string> Config::with_prefix(std::string_view prefix) const {
  std::map<std::string, std::string> out;
  for (const auto& e : entries_) {
    if (e.key.starts_with(prefix)) out[e.key.substr(prefix.size())] = e.value;
  }
  return out;
}

void Config::check_keys(const std::vector<std::string_view>& keys,
                        const std::vector<std::string_view>& prefixes) const {
  for (const auto& e : entries_) {
    const bool known = std::find(keys.begin(), keys.end(), e.key) != keys.end() ||
                       std::any_of(prefixes.begin(), prefixes.end(),
                                   [&](std::string_view p) { return e.key.starts_with(p); });
    if (!known) throw ConfigError(source_, e.line, e.key, "unknown key");
  }
}

void Config::fail(std::string_view key, const std::string& message) const {
  throw ConfigError(source_, line_of(key), std::string(key), message);
}

void Config::set(std::string key, std::string value) {
  for (auto& e : entries_) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  entries_.push_back({std::move(key), std::move(value), 0});
}

}  // namespace iml::cli
