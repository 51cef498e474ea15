#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"

namespace iml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFailure = 3;

inline constexpr const char* kSeedEnv = "IML_TOOLKIT_SEED";

struct Invocation {
  std::string command;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  int threads = 0;
  std::string figure;  // reproduce only
};

// Runs one subcommand and returns the process exit code. Diagnostics go to
// `err`.
int run(const Invocation& invocation, std::ostream& err);

// Seed precedence: --seed, then the config `seed` key, then IML_TOOLKIT_SEED,
// then 0.
std::uint64_t resolve_seed(const Invocation& invocation, const Config& config);

// Derived seed streams recorded in every report.
enum class Stream : std::uint64_t { data = 1, split = 2, fit = 3, method = 4, audit = 5 };
RngSeed stream_seed(std::uint64_t seed, Stream stream);

struct RunContext {
  const Config& config;
  std::uint64_t seed;
  OutputSet& outputs;
  Report& report;
};

void cmd_effect(RunContext& ctx);
void cmd_importance(RunContext& ctx);
void cmd_interaction(RunContext& ctx);
void cmd_dependence(RunContext& ctx);
void cmd_test(RunContext& ctx);
void cmd_audit(RunContext& ctx);

std::vector<std::string> figure_ids();
void cmd_reproduce(RunContext& ctx, const std::string& figure);

}  // namespace iml::cli
