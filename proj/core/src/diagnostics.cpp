#include "iml/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "iml/interactions.hpp"

namespace iml {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Dataset head_rows(const Dataset& data, Index rows, RngSeed seed) {
  if (data.n() <= rows) return data;
  auto rng = make_rng(seed);
  auto perm = random_permutation(data.n(), rng);
  perm.resize(static_cast<std::size_t>(rows));
  std::sort(perm.begin(), perm.end());
  return data.rows(perm);
}

std::vector<std::pair<Index, Index>> audit_pairs(Index p, std::optional<Index> focus, Index cap) {
  std::vector<std::pair<Index, Index>> pairs;
  for (Index a = 0; a < p; ++a) {
    for (Index b = a + 1; b < p; ++b) {
      if (p > cap && focus && a != *focus && b != *focus) continue;
      if (p > cap && !focus && b >= cap) continue;
      pairs.emplace_back(a, b);
    }
  }
  return pairs;
}

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

bool one_dimensional_aggregate(const AuditPlan& plan) {
  if (plan.kind == PlanKind::importance || plan.kind == PlanKind::test) return true;
  if (plan.kind != PlanKind::effect_1d) return false;
  return plan.method != "ice" && plan.method != "centered_ice" && plan.method != "derivative_ice";
}

}  // namespace

std::string_view to_string(Pitfall id) {
  switch (id) {
    case Pitfall::P1_one_fits_all: return "P1_one_fits_all";
    case Pitfall::P2_generalization: return "P2_generalization";
    case Pitfall::P3_unnecessary_complexity: return "P3_unnecessary_complexity";
    case Pitfall::P4_extrapolation: return "P4_extrapolation";
    case Pitfall::P5_nonlinear_dependence: return "P5_nonlinear_dependence";
    case Pitfall::P6_conditional_semantics: return "P6_conditional_semantics";
    case Pitfall::P7_masked_interaction: return "P7_masked_interaction";
    case Pitfall::P8_uncertainty_ignored: return "P8_uncertainty_ignored";
    case Pitfall::P9_high_dim: return "P9_high_dim";
    case Pitfall::P10_mcp: return "P10_mcp";
    case Pitfall::P11_causal: return "P11_causal";
  }
  return "P11_causal";
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::info: return "info";
    case Severity::warn: return "warn";
    case Severity::fail: return "fail";
  }
  return "info";
}

std::vector<AuditFinding> audit(const Dataset& train, const Dataset* test, const FittedModel& model,
                                const AuditPlan& plan, const AuditThresholds& t, RngSeed seed) {
  if (test && test->p() != train.p()) throw Error("audit: train and test feature counts differ");
  if (plan.feature_index && (*plan.feature_index < 0 || *plan.feature_index >= train.p())) {
    throw Error("audit: plan feature index out of range");
  }
  const Loss loss(LossKind::squared_error);
  const Predictor pred = model.predictor();
  std::vector<AuditFinding> out;

  const double train_loss = evaluate(pred, train, loss);
  std::optional<double> test_loss;
  if (test) test_loss = evaluate(pred, *test, loss);

  if (!test_loss) {
    out.push_back({Pitfall::P2_generalization, Severity::fail, "train_loss", train_loss, t.p2_loss_ratio,
                   "in-sample evaluation: no held-out split, generalization error unknown"});
  } else {
    const double ratio = train_loss > 0.0 ? *test_loss / train_loss : std::numeric_limits<double>::infinity();
    if (ratio > t.p2_loss_ratio) {
      out.push_back({Pitfall::P2_generalization, Severity::warn, "test_train_loss_ratio", ratio,
                     t.p2_loss_ratio,
                     "test loss is " + num(ratio) + "x the training loss; the model overfits"});
    }
  }

  {
    const FittedModel baseline = fit(ols_spec(), train, derive_seed(seed, 3));
    const Dataset& eval = test ? *test : train;
    const double model_loss = test_loss.value_or(train_loss);
    const double base_loss = evaluate(baseline.predictor(), eval, loss);
    const double relative = model_loss > 0.0 ? (base_loss - model_loss) / model_loss : 0.0;
    if (relative <= t.p3_relative_tolerance) {
      out.push_back({Pitfall::P3_unnecessary_complexity, Severity::warn, "ols_relative_loss_gap", relative,
                     t.p3_relative_tolerance,
                     "interpretable model sufficient: linear baseline loss is within tolerance"});
    }
  }

  if (plan.feature_index && (plan.kind == PlanKind::effect_1d || plan.kind == PlanKind::effect_2d ||
                             plan.kind == PlanKind::importance || plan.kind == PlanKind::test) &&
      !plan.conditional) {
    const Matrix points =
        perturbation_points(train, *plan.feature_index, plan.perturbation, plan.grid_size, derive_seed(seed, 4));
    const auto ex = extrapolation_score(train, points);
    if (ex.score > t.p4_extrapolation_score) {
      out.push_back({Pitfall::P4_extrapolation, Severity::fail, "extrapolation_score", ex.score,
                     t.p4_extrapolation_score,
                     num(100.0 * ex.score) + "% of perturbed points lie outside the training data"});
    }
  }

  if (train.p() >= 2) {
    const Dataset sub = head_rows(train, t.dependence_rows, derive_seed(seed, 5));
    const auto pairs = audit_pairs(train.p(), plan.feature_index, t.p9_high_dim_features);
    double best_p = 1.0;
    std::string best_pair;
    for (const auto& [a, b] : pairs) {
      const auto xa = column_values(sub.features(), a);
      const auto xb = column_values(sub.features(), b);
      if (is_constant(xa) || is_constant(xb)) continue;
      if (std::abs(pearson(xa, xb)) >= t.p5_max_abs_pearson) continue;
      const double pv = independence_test(xa, xb, DependenceStatistic::hsic, t.dependence_permutations,
                                          derive_seed(seed, 6, static_cast<std::uint64_t>(a * train.p() + b)));
      if (pv < best_p) {
        best_p = pv;
        best_pair = train.feature_name(a) + "," + train.feature_name(b);
      }
    }
    if (best_p < t.p5_alpha) {
      out.push_back({Pitfall::P5_nonlinear_dependence, Severity::warn, "min_hsic_p_weak_pearson", best_p,
                     t.p5_alpha,
                     "features " + best_pair + " are dependent (HSIC) but nearly uncorrelated (Pearson)"});
    }
  }

  if (train.p() >= 2 && one_dimensional_aggregate(plan)) {
    const auto pairs = audit_pairs(train.p(), plan.feature_index, t.p9_high_dim_features);
    double best = 0.0;
    std::string best_pair;
    for (const auto& [a, b] : pairs) {
      const auto h = h_pairwise(pred, train, a, b, t.interaction_rows, derive_seed(seed, 7));
      if (h.h_squared > best) {
        best = h.h_squared;
        best_pair = h.features[0] + "," + h.features[1];
      }
    }
    if (best > t.p7_h_squared) {
      out.push_back({Pitfall::P7_masked_interaction, Severity::warn, "max_pairwise_h_squared", best,
                     t.p7_h_squared,
                     "interaction " + best_pair + " can cancel out in a one-dimensional aggregate"});
    }
  }

  if (plan.replicates < t.p8_min_replicates) {
    out.push_back({Pitfall::P8_uncertainty_ignored, Severity::warn, "replicates",
                   static_cast<double>(plan.replicates), static_cast<double>(t.p8_min_replicates),
                   "too few replicates to quantify estimation or model variance"});
  }

  if (plan.conditional) {
    out.push_back({Pitfall::P6_conditional_semantics, Severity::info, "conditional", 1.0, 0.0,
                   "conditional scores measure information not already carried by the other features"});
  }

  if (train.p() >= t.p9_high_dim_features) {
    out.push_back({Pitfall::P9_high_dim, Severity::info, "n_features", static_cast<double>(train.p()),
                   static_cast<double>(t.p9_high_dim_features),
                   "many features: per-feature summaries may be hard to read; consider grouping"});
  }

  if (plan.n_tested >= 2 && plan.correction == Correction::none) {
    out.push_back({Pitfall::P10_mcp, Severity::warn, "n_tested", static_cast<double>(plan.n_tested), 2.0,
                   "multiple features tested without a multiple-comparison correction"});
  }

  out.push_back({Pitfall::P11_causal, Severity::info, "causal_claims", 0.0, 0.0,
                 "relevance to the model does not indicate that a feature is a cause of the target"});
  return out;
}

bool has_finding(const std::vector<AuditFinding>& findings, Pitfall id, Severity at_least) {
  return std::any_of(findings.begin(), findings.end(), [&](const AuditFinding& f) {
    return f.pitfall_id == id && static_cast<int>(f.severity) >= static_cast<int>(at_least);
  });
}

std::string findings_to_json(const std::vector<AuditFinding>& findings) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : findings) {
    nlohmann::ordered_json j;
    j["pitfall_id"] = to_string(f.pitfall_id);
    j["severity"] = to_string(f.severity);
    j["metric"] = f.metric;
    j["value"] = std::isfinite(f.value) ? nlohmann::ordered_json(f.value) : nlohmann::ordered_json(nullptr);
    j["threshold"] = f.threshold;
    j["message"] = f.message;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace iml
