#include "app.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ostream>

#include "iml/parallel.hpp"

namespace iml::cli {
namespace {

const std::vector<std::string_view> kCommonKeys = {
    "seed",
    "data.dgp",
    "data.p",
    "data.n",
    "data.test_n",
    "data.path",
    "data.test_path",
    "data.target",
    "data.test_fraction",
    "learner.kind",
    "method.name",
    "method.feature",
    "method.feature_b",
    "method.eval",
    "method.loss",
    "method.grid",
    "method.grid_size",
    "method.centered",
    "method.anchor",
    "method.derivative",
    "method.intervals",
    "method.fraction",
    "method.replicates",
    "method.subsample",
    "method.n_per_fit",
    "method.repeats",
    "method.max_leaves",
    "method.background_rows",
    "method.eval_rows",
    "method.n_orderings",
    "method.imputation_samples",
    "method.batches",
    "method.mode",
    "method.rows",
    "method.n_permutations",
    "method.quantile",
    "method.target_permutations",
    "method.pfi_repeats",
    "method.correction",
    "method.alpha",
    "method.n_tested",
    "audit.enabled",
    "audit.p2_loss_ratio",
    "audit.p3_relative_tolerance",
    "audit.p4_extrapolation_score",
    "audit.p5_alpha",
    "audit.p5_max_abs_pearson",
    "audit.p7_h_squared",
    "audit.p8_min_replicates",
    "audit.p9_high_dim_features",
    "audit.dependence_rows",
    "audit.dependence_permutations",
    "audit.interaction_rows",
};

const std::vector<std::string_view> kReproduceKeys = {"seed", "reproduce.seeds", "reproduce.runs",
                                                      "reproduce.global_null_runs"};

std::optional<std::uint64_t> parse_u64(std::string_view text) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return out;
}

void dispatch(RunContext& ctx, const Invocation& inv) {
  const std::string& c = inv.command;
  if (c == "effect") cmd_effect(ctx);
  else if (c == "importance") cmd_importance(ctx);
  else if (c == "interaction") cmd_interaction(ctx);
  else if (c == "dependence") cmd_dependence(ctx);
  else if (c == "test") cmd_test(ctx);
  else if (c == "audit") cmd_audit(ctx);
  else if (c == "reproduce") cmd_reproduce(ctx, inv.figure);
  else throw ConfigError("command line", 0, "", "unknown command '" + c + "'");
}

}  // namespace

RngSeed stream_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(RngSeed{seed}, static_cast<std::uint64_t>(stream));
}

std::uint64_t resolve_seed(const Invocation& invocation, const Config& config) {
  if (invocation.seed) return *invocation.seed;
  if (auto s = config.get_u64("seed")) return *s;
  if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    if (auto s = parse_u64(env)) return *s;
    throw ConfigError(kSeedEnv, 0, "", "expected an unsigned 64-bit integer, got '" + std::string(env) + "'");
  }
  return 0;
}

int run(const Invocation& inv, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  Config config;
  std::uint64_t seed = 0;
  try {
    if (inv.config_path) config = Config::load(*inv.config_path);
    if (inv.command == "reproduce") {
      config.check_keys(kReproduceKeys, {});
    } else {
      config.check_keys(kCommonKeys, {"learner.params.", "groups."});
    }
    seed = resolve_seed(inv, config);
    if (inv.threads < 0) throw ConfigError("command line", 0, "", "--threads must be nonnegative");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  set_max_threads(static_cast<unsigned>(inv.threads));

  std::optional<OutputSet> outputs;
  try {
    outputs.emplace(inv.out_dir);
  } catch (const std::exception& e) {
    err << "error: cannot create output directory '" << inv.out_dir.string() << "': " << e.what() << '\n';
    return kExitFailure;
  }
  Report report(inv.command, seed);
  std::vector<std::pair<std::string, std::string>> echo;
  for (const auto& e : config.entries()) echo.emplace_back(e.key, e.value);
  report.echo_config(echo);
  if (!inv.figure.empty()) report.set("figure", inv.figure);
  set_warning_handler([&](std::string_view msg) {
    report.add_warning(std::string(msg));
    err << "warning: " << msg << '\n';
  });

  RunContext ctx{config, seed, *outputs, report};
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  int code = kExitOk;
  try {
    dispatch(ctx, inv);
    report.write(outputs->dir() / "report.json", *outputs, elapsed(), false);
    if (!report.passed()) {
      for (const auto& a : report.assertions()) {
        if (!a.pass) err << "assertion failed: " << a.name << " = " << a.value << " (want " << a.relation << ' '
                         << a.threshold << ")\n";
      }
      code = kExitAssertion;
    }
  } catch (const ConfigError& e) {
    outputs->discard();
    err << "error: " << e.what() << '\n';
    code = kExitConfig;
  } catch (const std::exception& e) {
    outputs->discard();
    err << "error: " << e.what() << '\n';
    try {
      report.write(outputs->dir() / "report.json", *outputs, elapsed(), true, e.what());
    } catch (const std::exception&) {
    }
    code = kExitFailure;
  }
  set_warning_handler(nullptr);
  return code;
}

}  // namespace iml::cli
