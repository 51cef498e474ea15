#pragma once

#include <filesystem>
#include <fstream>
#include <string_view>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iml/diagnostics.hpp"

namespace iml::cli {

using Json = nlohmann::ordered_json;

struct Assertion {
  std::string name;
  double value = 0.0;
  std::string relation;  // e.g. ">=", "<", "in"
  double threshold = 0.0;
  bool pass = false;
};

// Files written by one invocation; removed again when the run fails.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file(const std::string& name);
  const std::vector<std::string>& names() const { return names_; }
  void discard();

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

// Opens a CSV for writing with full double precision and writes the header row.
std::ofstream open_csv(const std::filesystem::path& path, std::string_view header);

class Report {
 public:
  Report(std::string command, std::uint64_t seed);

  Json& metrics() { return doc_["metrics"]; }
  Json& derived_seeds() { return doc_["derived_seeds"]; }
  void set(const std::string& key, Json value) { doc_[key] = std::move(value); }
  void echo_config(const std::vector<std::pair<std::string, std::string>>& entries);

  const Assertion& check(std::string name, double value, std::string relation, double threshold);
  void add_findings(const std::vector<AuditFinding>& findings);
  void add_warning(std::string message);

  bool passed() const;
  const std::vector<Assertion>& assertions() const { return assertions_; }

  void write(const std::filesystem::path& path, const OutputSet& outputs, double seconds, bool failed,
             const std::string& error = {});

 private:
  Json doc_;
  std::vector<Assertion> assertions_;
  std::vector<std::string> warnings_;
  std::vector<AuditFinding> findings_;
};

}  // namespace iml::cli
