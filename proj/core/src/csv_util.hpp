#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include "iml/core.hpp"

namespace iml::detail {

// Shortest round-trip decimal representation; identical inputs always give
// identical bytes.
inline std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace iml::detail
