#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "iml/version.hpp"

namespace iml::cli {

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path OutputSet::file(const std::string& name) {
  if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
  return dir_ / name;
}

void OutputSet::discard() {
  std::error_code ec;
  for (const auto& name : names_) std::filesystem::remove(dir_ / name, ec);
  names_.clear();
}

std::ofstream open_csv(const std::filesystem::path& path, std::string_view header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.precision(17);
  out << header << '\n';
  return out;
}

Report::Report(std::string command, std::uint64_t seed) {
  doc_["tool"] = "imlkit";
  doc_["version"] = kVersion;
  doc_["command"] = std::move(command);
  doc_["seed"] = seed;
  doc_["derived_seeds"] = Json::object();
  doc_["config"] = Json::object();
  doc_["metrics"] = Json::object();
}

void Report::echo_config(const std::vector<std::pair<std::string, std::string>>& entries) {
  Json cfg = Json::object();
  for (const auto& [k, v] : entries) cfg[k] = v;
  doc_["config"] = std::move(cfg);
}

const Assertion& Report::check(std::string name, double value, std::string relation, double threshold) {
  bool pass = false;
  if (relation == ">=") pass = value >= threshold;
  else if (relation == ">") pass = value > threshold;
  else if (relation == "<=") pass = value <= threshold;
  else if (relation == "<") pass = value < threshold;
  else if (relation == "==") pass = value == threshold;
  else throw Error("unknown assertion relation '" + relation + "'");
  assertions_.push_back({std::move(name), value, std::move(relation), threshold, pass});
  return assertions_.back();
}

void Report::add_findings(const std::vector<AuditFinding>& findings) {
  findings_.insert(findings_.end(), findings.begin(), findings.end());
}

void Report::add_warning(std::string message) { warnings_.push_back(std::move(message)); }

bool Report::passed() const {
  return std::all_of(assertions_.begin(), assertions_.end(), [](const Assertion& a) { return a.pass; });
}

void Report::write(const std::filesystem::path& path, const OutputSet& outputs, double seconds, bool failed,
                   const std::string& error) {
  Json doc = doc_;
  Json asserts = Json::array();
  for (const auto& a : assertions_) {
    asserts.push_back({{"name", a.name},
                       {"value", std::isfinite(a.value) ? Json(a.value) : Json(nullptr)},
                       {"relation", a.relation},
                       {"threshold", a.threshold},
                       {"pass", a.pass}});
  }
  doc["assertions"] = std::move(asserts);
  doc["status"] = failed ? "error" : (passed() ? "pass" : "fail");
  if (!error.empty()) doc["error"] = error;
  std::vector<std::string> failing;
  for (const auto& a : assertions_) {
    if (!a.pass) failing.push_back(a.name);
  }
  doc["failing"] = failing;
  doc["findings"] = Json::parse(findings_to_json(findings_));
  doc["warnings"] = warnings_;
  doc["outputs"] = outputs.names();
  doc["wall_clock_seconds"] = seconds;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace iml::cli
