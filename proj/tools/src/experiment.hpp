#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "app.hpp"
#include "iml/core.hpp"
#include "iml/dgp.hpp"
#include "iml/diagnostics.hpp"
#include "iml/learners.hpp"

namespace iml::cli {

// Data, split and fitted model described by the `data.*` and `learner.*` keys.
struct Experiment {
  std::optional<DgpSpec> dgp;
  std::optional<Dataset> train;
  std::optional<Dataset> test;
  std::optional<FittedModel> model;

  // `method.eval` (train or test); falls back to train without a split.
  const Dataset& eval(const Config& config, std::string_view default_split) const;
  const Dataset* test_ptr() const { return test ? &*test : nullptr; }
};

Experiment prepare(RunContext& ctx, bool fit_model = true);

LearnerSpec learner_from_config(const Config& config);
Loss loss_from_config(const Config& config);
Index feature_from_config(const Config& config, const Dataset& data, std::string_view key);
Grid grid_from_config(const Config& config, const Dataset& data, Index feature, RngSeed seed);
AuditThresholds thresholds_from_config(const Config& config);

// Converts "<key>: message" and "<key> message" errors raised by the core into line-anchored
// config errors when `key` appears in the config.
template <class F>
auto with_config_keys(const Config& config, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    const std::string msg = e.what();
    const auto end = msg.find_first_of(": ");
    if (end != std::string::npos) {
      const std::string key = msg.substr(0, end);
      const auto rest = msg.find_first_not_of(": ", end);
      if (config.has(key)) config.fail(key, rest == std::string::npos ? msg : msg.substr(rest));
    }
    throw;
  }
}

void attach_audit(RunContext& ctx, const Experiment& ex, const AuditPlan& plan);

}  // namespace iml::cli
