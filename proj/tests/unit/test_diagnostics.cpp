#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "iml/diagnostics.hpp"

using namespace iml;

namespace {

struct Fitted {
  Dataset train;
  Dataset test;
  FittedModel model;
};

Fitted make(const std::string& dgp, const LearnerSpec& learner, Index n, std::uint64_t seed) {
  const Dataset all = sample(find_dgp(dgp), n, derive_seed(RngSeed{seed}, 1));
  auto [train, test] = train_test_split(all, 0.3, derive_seed(RngSeed{seed}, 2));
  FittedModel model = fit(learner, train, derive_seed(RngSeed{seed}, 3));
  return {std::move(train), std::move(test), std::move(model)};
}

const AuditFinding* find(const std::vector<AuditFinding>& f, Pitfall id) {
  for (const auto& x : f) {
    if (x.pitfall_id == id) return &x;
  }
  return nullptr;
}

AuditPlan pdp_plan(Index feature, Perturbation perturbation = Perturbation::quantile) {
  AuditPlan plan;
  plan.method = "pdp";
  plan.kind = PlanKind::effect_1d;
  plan.feature_index = feature;
  plan.perturbation = perturbation;
  plan.replicates = 10;
  return plan;
}

}  // namespace

TEST(Audit, Fig3ForestOverfits) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Fitted x = make("fig3_interaction", forest_spec(50), 500, s);
    const auto f = audit(x.train, &x.test, x.model, pdp_plan(0), AuditThresholds{}, RngSeed{s});
    const AuditFinding* p2 = find(f, Pitfall::P2_generalization);
    if (p2 && p2->severity == Severity::warn) {
      ++hits;
      EXPECT_EQ(p2->metric, "test_train_loss_ratio");
      EXPECT_GT(p2->value, p2->threshold);
    }
  }
  EXPECT_GE(hits, 9);
}

TEST(Audit, CorrelatedEquidistantGridExtrapolates) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Fitted x = make("correlated_gaussian", ols_spec(), 500, s);
    const auto f = audit(x.train, &x.test, x.model, pdp_plan(0, Perturbation::equidistant), AuditThresholds{},
                         RngSeed{s});
    const AuditFinding* p4 = find(f, Pitfall::P4_extrapolation);
    if (p4 && p4->severity == Severity::fail && p4->value > 0.5) ++hits;
  }
  EXPECT_GE(hits, 9);
}

TEST(Audit, LinearProblemOnlyFlagsSimplicity) {
  const Fitted x = make("linear_independent", ols_spec(), 400, 1);
  const auto f = audit(x.train, &x.test, x.model, pdp_plan(0), AuditThresholds{}, RngSeed{1});
  const AuditFinding* p3 = find(f, Pitfall::P3_unnecessary_complexity);
  ASSERT_NE(p3, nullptr);
  EXPECT_EQ(p3->severity, Severity::warn);
  EXPECT_NE(p3->message.find("interpretable model sufficient"), std::string::npos);
  EXPECT_FALSE(has_finding(f, Pitfall::P4_extrapolation, Severity::info));
  EXPECT_FALSE(has_finding(f, Pitfall::P5_nonlinear_dependence, Severity::info));
  EXPECT_FALSE(has_finding(f, Pitfall::P7_masked_interaction, Severity::info));
  EXPECT_FALSE(has_finding(f, Pitfall::P2_generalization, Severity::info));
  EXPECT_FALSE(has_finding(f, Pitfall::P8_uncertainty_ignored, Severity::info));
  const AuditFinding* p11 = find(f, Pitfall::P11_causal);
  ASSERT_NE(p11, nullptr);
  EXPECT_EQ(p11->severity, Severity::info);
}

TEST(Audit, MissingTestSplitFailsGeneralization) {
  const Fitted x = make("linear_independent", ols_spec(), 200, 2);
  const auto f = audit(x.train, nullptr, x.model, pdp_plan(0), AuditThresholds{}, RngSeed{2});
  const AuditFinding* p2 = find(f, Pitfall::P2_generalization);
  ASSERT_NE(p2, nullptr);
  EXPECT_EQ(p2->severity, Severity::fail);
  EXPECT_NE(p2->message.find("in-sample"), std::string::npos);
}

TEST(Audit, RingFeaturesFlagNonlinearDependence) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Fitted x = make("ring_dependence", ols_spec(), 400, s);
    const auto f = audit(x.train, &x.test, x.model, pdp_plan(0), AuditThresholds{}, RngSeed{s});
    hits += has_finding(f, Pitfall::P5_nonlinear_dependence);
  }
  EXPECT_GE(hits, 9);
}

TEST(Audit, Fig5InteractionMaskedInPdp) {
  int hits = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Fitted x = make("fig5_masked", forest_spec(50), 400, s);
    const auto f = audit(x.train, &x.test, x.model, pdp_plan(1), AuditThresholds{}, RngSeed{s});
    hits += has_finding(f, Pitfall::P7_masked_interaction);
  }
  EXPECT_GE(hits, 9);
  const Fitted x = make("fig5_masked", forest_spec(20), 300, 0);
  AuditPlan ice = pdp_plan(1);
  ice.method = "ice";
  EXPECT_FALSE(has_finding(audit(x.train, &x.test, x.model, ice, AuditThresholds{}, RngSeed{}),
                           Pitfall::P7_masked_interaction, Severity::info));
}

TEST(Audit, PlanDrivenNotes) {
  const Fitted x = make("fig8_mcp", ols_spec(), 200, 3);
  AuditPlan plan;
  plan.method = "pimp";
  plan.kind = PlanKind::test;
  plan.n_tested = 4;
  plan.correction = Correction::none;
  plan.replicates = 3;
  plan.conditional = true;
  const auto f = audit(x.train, &x.test, x.model, plan, AuditThresholds{}, RngSeed{});
  EXPECT_TRUE(has_finding(f, Pitfall::P10_mcp));
  EXPECT_TRUE(has_finding(f, Pitfall::P8_uncertainty_ignored));
  const AuditFinding* p6 = find(f, Pitfall::P6_conditional_semantics);
  ASSERT_NE(p6, nullptr);
  EXPECT_EQ(p6->severity, Severity::info);
  plan.correction = Correction::bonferroni;
  plan.replicates = 30;
  const auto g = audit(x.train, &x.test, x.model, plan, AuditThresholds{}, RngSeed{});
  EXPECT_FALSE(has_finding(g, Pitfall::P10_mcp, Severity::info));
  EXPECT_FALSE(has_finding(g, Pitfall::P8_uncertainty_ignored, Severity::info));
  EXPECT_FALSE(has_finding(g, Pitfall::P9_high_dim, Severity::info));

  const Fitted wide = make("fig2_noise", ols_spec(), 200, 4);
  const auto h = audit(wide.train, &wide.test, wide.model, pdp_plan(0), AuditThresholds{}, RngSeed{});
  const AuditFinding* p9 = find(h, Pitfall::P9_high_dim);
  ASSERT_NE(p9, nullptr);
  EXPECT_EQ(p9->severity, Severity::info);
}

TEST(Audit, ThresholdsAreHonoured) {
  const Fitted x = make("fig3_interaction", forest_spec(30), 300, 5);
  AuditThresholds loose;
  loose.p2_loss_ratio = 1e9;
  const auto f = audit(x.train, &x.test, x.model, pdp_plan(0), loose, RngSeed{});
  EXPECT_FALSE(has_finding(f, Pitfall::P2_generalization, Severity::info));
  AuditPlan bad = pdp_plan(5);
  EXPECT_THROW(audit(x.train, &x.test, x.model, bad, AuditThresholds{}, RngSeed{}), Error);
}

TEST(Audit, DeterministicAndSerializable) {
  const Fitted x = make("ring_dependence", forest_spec(20), 300, 6);
  const auto a = audit(x.train, &x.test, x.model, pdp_plan(0), AuditThresholds{}, RngSeed{9});
  const auto b = audit(x.train, &x.test, x.model, pdp_plan(0), AuditThresholds{}, RngSeed{9});
  EXPECT_EQ(findings_to_json(a), findings_to_json(b));
  const auto j = nlohmann::json::parse(findings_to_json(a));
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), a.size());
  for (const auto& item : j) {
    for (const char* key : {"pitfall_id", "severity", "metric", "value", "threshold", "message"}) {
      EXPECT_TRUE(item.contains(key)) << key;
    }
  }
  EXPECT_EQ(j.back()["pitfall_id"], "P11_causal");
}
