#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iml/core.hpp"
#include "iml/dependence.hpp"
#include "iml/inference.hpp"
#include "iml/learners.hpp"

namespace iml {

enum class Pitfall {
  P1_one_fits_all,
  P2_generalization,
  P3_unnecessary_complexity,
  P4_extrapolation,
  P5_nonlinear_dependence,
  P6_conditional_semantics,
  P7_masked_interaction,
  P8_uncertainty_ignored,
  P9_high_dim,
  P10_mcp,
  P11_causal,
};

enum class Severity { info, warn, fail };

std::string_view to_string(Pitfall id);
std::string_view to_string(Severity severity);

struct AuditFinding {
  Pitfall pitfall_id = Pitfall::P11_causal;
  Severity severity = Severity::info;
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  std::string message;
};

enum class PlanKind { effect_1d, effect_2d, importance, interaction, dependence, test };

// What the user intends to interpret.
struct AuditPlan {
  std::string method = "pdp";  // pdp, ice, ale, pfi, cfi, sage, shap, h, pimp, ...
  PlanKind kind = PlanKind::effect_1d;
  std::optional<Index> feature_index;  // feature swept or permuted
  Perturbation perturbation = Perturbation::quantile;
  int grid_size = kDefaultGridSize;
  int replicates = 0;  // repeats / replicate fits the plan reports
  int n_tested = 0;    // features under hypothesis test
  Correction correction = Correction::none;
  bool conditional = false;
};

struct AuditThresholds {
  double p2_loss_ratio = 2.0;
  double p3_relative_tolerance = 0.05;
  double p4_extrapolation_score = 0.3;
  double p5_alpha = 0.05;
  double p5_max_abs_pearson = 0.2;
  double p7_h_squared = 0.25;
  int p8_min_replicates = 10;
  Index p9_high_dim_features = 20;
  // Cost caps for the embedded checks.
  Index dependence_rows = 200;
  int dependence_permutations = 99;
  Index interaction_rows = 100;
};

// Runs the checks relevant to `plan`. With more than p9_high_dim_features
// features the pairwise checks only visit pairs containing the plan feature
// (or, without one, pairs among the first p9_high_dim_features features).
// Only triggered checks and the fixed informational notes are returned.
// `test` may be null (in-sample audit).
std::vector<AuditFinding> audit(const Dataset& train, const Dataset* test, const FittedModel& model,
                                const AuditPlan& plan, const AuditThresholds& thresholds,
                                RngSeed seed);

bool has_finding(const std::vector<AuditFinding>& findings, Pitfall id,
                 Severity at_least = Severity::warn);

// JSON array of {pitfall_id, severity, metric, value, threshold, message}.
std::string findings_to_json(const std::vector<AuditFinding>& findings);

}  // namespace iml
