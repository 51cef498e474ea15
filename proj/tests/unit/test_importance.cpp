#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "iml/dgp.hpp"
#include "iml/importance.hpp"
#include "iml/learners.hpp"
#include "oracles.hpp"

using namespace iml;

namespace {

Vector coef(std::initializer_list<double> c) {
  Vector v(static_cast<Index>(c.size()));
  Index i = 0;
  for (double x : c) v(i++) = x;
  return v;
}

std::vector<double> instance(const Dataset& d, Index i) {
  std::vector<double> out(static_cast<std::size_t>(d.p()));
  for (Index j = 0; j < d.p(); ++j) out[static_cast<std::size_t>(j)] = d.features()(i, j);
  return out;
}

Dataset uniform_data(Index n, Index p, std::uint64_t seed) {
  auto rng = make_rng(RngSeed{seed});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = u(rng);
  }
  return Dataset(x, x.col(0));
}

Dataset duplicated_data(Index n, std::uint64_t seed) {
  auto rng = make_rng(RngSeed{seed});
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(n, 3);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = z(rng);
    x(i, 1) = x(i, 0);
    x(i, 2) = z(rng);
    y(i) = x(i, 0) + x(i, 1) + 0.1 * z(rng);
  }
  return Dataset(x, y);
}

Predictor fig4_predictor() { return Predictor::linear(coef({0.0, 0.5, 0.5})); }

}  // namespace

TEST(Pfi, IdentityModelDoublesTheVariance) {
  const Dataset d = uniform_data(4000, 1, 1);
  const ImportanceResult r = pfi(Predictor::linear(coef({1.0})), d, Loss(), 10, RngSeed{2});
  EXPECT_NEAR(r.scores[0], 1.0 / 6.0, 1.0 / 60.0);
  EXPECT_EQ(r.replicates[0].size(), 10u);
  EXPECT_NEAR(r.scores[0], mean(r.replicates[0]), 1e-15);
  EXPECT_NEAR(r.q05[0], oracle::quantile7(r.replicates[0], 0.05), 1e-15);
  EXPECT_NEAR(r.q95[0], oracle::quantile7(r.replicates[0], 0.95), 1e-15);
}

TEST(Pfi, UnusedFeatureScoresExactlyZero) {
  const Dataset d = uniform_data(200, 3, 3);
  const ImportanceResult r = pfi(Predictor::linear(coef({1.0, 0.0, 2.0})), d, Loss(), 5, RngSeed{4});
  for (double v : r.replicates[1]) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(r.band_contains(1, 0.0));
  EXPECT_GT(r.scores[0], 0.0);
  EXPECT_THROW(pfi(Predictor::constant(0.0), d, Loss(), 0, RngSeed{}), Error);
  const std::vector<Index> one = {0};
  EXPECT_THROW(pfi(Predictor::constant(0.0), d.rows(one), Loss(), 1, RngSeed{}), Error);
}

TEST(Pfi, SameSeedSameResult) {
  const Dataset d = sample(find_dgp("fig5_masked"), 200, RngSeed{5});
  const Predictor f = oracle_predictor("fig5_masked");
  const ImportanceResult a = pfi(f, d, Loss(), 4, RngSeed{9});
  const ImportanceResult b = pfi(f, d, Loss(), 4, RngSeed{9});
  EXPECT_EQ(a.replicates, b.replicates);
}

TEST(Importance, UnusedFeatureMeanOverSeedsWithinTwoStandardErrors) {
  const Predictor f([](const Matrix& x) -> Vector {
    return (3.0 * x.col(0).array() - 6.0 * x.col(1).array().abs()).matrix();
  });
  std::vector<double> pfi_scores, cfi_scores, sage_scores;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Dataset d = sample(find_dgp("fig5_masked"), 150, RngSeed{100 + s});
    pfi_scores.push_back(pfi(f, d, Loss(), 3, RngSeed{s}).scores[2]);
    cfi_scores.push_back(cfi_all(f, d, Loss(), 4, 3, RngSeed{s}).scores[2]);
    SageOptions o;
    o.n_orderings = 64;
    o.imputation_samples = 4;
    o.batches = 4;
    sage_scores.push_back(sage(f, d, Loss(), SageMode::marginal, o, RngSeed{s}).scores[2]);
  }
  for (const auto* v : {&pfi_scores, &cfi_scores, &sage_scores}) {
    const double se = std::sqrt(sample_variance(*v) / 20.0);
    EXPECT_LE(std::abs(mean(*v)), 2.0 * se + 1e-12);
  }
}

TEST(ConditionalSampler, EveryRowInExactlyOneLeaf) {
  const Dataset d = sample(find_dgp("chain_scm"), 1000, RngSeed{6});
  const ConditionalSampler s = fit_conditional_sampler(d, 1, default_max_leaves(d.n()), RngSeed{1});
  EXPECT_GT(s.n_leaves(), 1);
  EXPECT_LE(s.n_leaves(), default_max_leaves(d.n()));
  const auto leaves = s.leaves(d.features());
  std::vector<int> hits(static_cast<std::size_t>(d.n()), 0);
  for (const auto& leaf : leaves) {
    EXPECT_GE(leaf.size(), static_cast<std::size_t>(kConditionalMinLeaf));
    EXPECT_TRUE(std::is_sorted(leaf.begin(), leaf.end()));
    for (Index i : leaf) ++hits[static_cast<std::size_t>(i)];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(fit_conditional_sampler(d, 1, 0, RngSeed{}), Error);
}

TEST(ConditionalSampler, DuplicateFeatureLeavesAreNarrow) {
  const Dataset d = duplicated_data(2000, 7);
  const ConditionalSampler s = fit_conditional_sampler(d, 1, default_max_leaves(d.n()), RngSeed{1});
  const auto col = column_values(d.features(), 0);
  const double range = *std::max_element(col.begin(), col.end()) - *std::min_element(col.begin(), col.end());
  double widest = 0.0;
  std::size_t interior = 0;
  for (const auto& leaf : s.leaves(d.features())) {
    double lo = 1e300, hi = -1e300;
    for (Index i : leaf) {
      lo = std::min(lo, d.features()(i, 0));
      hi = std::max(hi, d.features()(i, 0));
    }
    if (lo > -2.0 && hi < 2.0) {
      widest = std::max(widest, hi - lo);
      ++interior;
    }
  }
  EXPECT_GT(interior, 0u);
  EXPECT_LT(widest, 0.1 * range);
}

TEST(ConditionalSampler, SmallSampleFallsBackWithWarning) {
  std::vector<std::string> seen;
  set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
  const Dataset d = sample(find_dgp("chain_scm"), 30, RngSeed{8});
  const ConditionalSampler s = fit_conditional_sampler(d, 0, 10, RngSeed{1});
  set_warning_handler(nullptr);
  EXPECT_EQ(s.n_leaves(), 1);
  EXPECT_EQ(seen.size(), 1u);
}

TEST(Cfi, SingleLeafSamplerReproducesPfi) {
  const Dataset d = sample(find_dgp("fig5_masked"), 120, RngSeed{9});
  const Predictor f = oracle_predictor("fig5_masked");
  const ImportanceResult m = pfi(f, d, Loss(), 6, RngSeed{3});
  for (Index j = 0; j < 3; ++j) {
    const ImportanceResult c = cfi(f, d, Loss(), ConditionalSampler::single_leaf({j}, 3), 6, RngSeed{3});
    EXPECT_EQ(c.replicates[0], m.replicates[static_cast<std::size_t>(j)]) << j;
  }
}

TEST(Cfi, IndependentFeaturesMatchPfi) {
  const Dataset d = sample(find_dgp("fig6_flat"), 2000, RngSeed{10});
  const Predictor f = oracle_predictor("fig6_flat");
  const ImportanceResult m = pfi(f, d, Loss(), 5, RngSeed{1});
  const ImportanceResult c = cfi_all(f, d, Loss(), default_max_leaves(d.n()), 5, RngSeed{1});
  for (std::size_t j = 1; j < 10; ++j) EXPECT_NEAR(c.scores[j], m.scores[j], 0.2 * m.scores[j]) << j;
  EXPECT_EQ(m.scores[0], 0.0);
  EXPECT_EQ(c.scores[0], 0.0);
}

TEST(Cfi, ChainSeparatesDirectFromIndirectInformation) {
  const Dataset d = sample(find_dgp("chain_scm"), 2000, RngSeed{11});
  const Predictor f = fig4_predictor();
  const ImportanceResult m = pfi(f, d, Loss(), 10, RngSeed{1});
  const ImportanceResult c = cfi_all(f, d, Loss(), default_max_leaves(d.n()), 10, RngSeed{1});
  EXPECT_GT(m.q05[1], 0.0);
  EXPECT_GT(m.q05[2], 0.0);
  EXPECT_EQ(m.scores[0], 0.0);
  EXPECT_LT(c.scores[1], 0.1 * m.scores[1]);
  EXPECT_GT(c.q05[2], 0.0);
}

TEST(ShapleyExact, MatchesSubsetEnumerationOracle) {
  const Dataset d = sample(find_dgp("fig5_masked"), 40, RngSeed{12});
  const Predictor f = oracle_predictor("fig5_masked");
  const Dataset bg = background_sample(d, RngSeed{1}, 15);
  for (Index i : {0, 5, 17}) {
    const auto x = instance(d, i);
    const ShapleyExplanation e = shapley_exact(f, bg, x);
    const auto phi = oracle::shapley(f, bg.features(), x);
    for (Index j = 0; j < 3; ++j) EXPECT_NEAR(e.phi(j), phi[static_cast<std::size_t>(j)], 1e-10);
    EXPECT_LE(std::abs(e.efficiency_residual()), 1e-10);
    EXPECT_EQ(e.n_orderings, 0);
    EXPECT_NEAR(e.base_value, f.predict(bg.features()).mean(), 1e-12);
  }
}

TEST(ShapleyExact, LinearClosedFormAndAxioms) {
  const Dataset d = sample(find_dgp("linear_independent"), 30, RngSeed{13});
  const Vector beta = coef({1.5, -2.0, 0.5});
  const auto x = instance(d, 3);
  const ShapleyExplanation e = shapley_exact(Predictor::linear(beta, 1.0), d, x);
  const Vector mu = d.features().colwise().mean();
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(e.phi(j), beta(j) * (x[static_cast<std::size_t>(j)] - mu(j)), 1e-12);

  const ShapleyExplanation c = shapley_exact(Predictor::constant(2.0), d, x);
  EXPECT_EQ(c.phi.cwiseAbs().maxCoeff(), 0.0);

  const Dataset dup = duplicated_data(25, 14);
  const Predictor sum01 = Predictor::linear(coef({1.0, 1.0, 0.0}));
  const ShapleyExplanation s = shapley_exact(sum01, dup, instance(dup, 2));
  EXPECT_NEAR(s.phi(0), s.phi(1), 1e-12);
  EXPECT_EQ(s.phi(2), 0.0);
}

TEST(ShapleyExact, RejectsTooManyFeatures) {
  const Dataset d = sample(find_dgp("fig2_noise"), 5, RngSeed{1});
  EXPECT_THROW(shapley_exact(Predictor::constant(0.0), d, instance(d, 0)), Error);
  EXPECT_THROW(shapley_exact(Predictor::constant(0.0), d, std::vector<double>{1.0}), Error);
}

TEST(ShapleySampled, AgreesWithExactWithinThreeStandardErrors) {
  const Dataset d = sample(find_dgp("fig5_masked"), 200, RngSeed{15});
  const FittedModel m = fit(forest_spec(30), d, RngSeed{1});
  const Dataset bg = background_sample(d, RngSeed{2}, 50);
  const auto x = instance(d, 7);
  const ShapleyExplanation exact = shapley_exact(m.predictor(), bg, x);
  const ShapleyExplanation est = shapley_sampled(m.predictor(), bg, x, 4000, RngSeed{3});
  for (Index j = 0; j < 3; ++j) {
    EXPECT_GT(est.standard_error(j), 0.0);
    EXPECT_LE(std::abs(est.phi(j) - exact.phi(j)), 3.0 * est.standard_error(j)) << j;
  }
  EXPECT_LE(std::abs(est.efficiency_residual()), 3.0 * est.sum_standard_error + 1e-12);
  EXPECT_NEAR(exact.base_value, est.base_value, 1e-12);
}

TEST(ShapleySampled, StandardErrorHalvesWhenOrderingsQuadruple) {
  const Dataset d = sample(find_dgp("fig5_masked"), 200, RngSeed{16});
  const Predictor f = oracle_predictor("fig5_masked");
  const auto x = instance(d, 1);
  const ShapleyExplanation a = shapley_sampled(f, d, x, 2000, RngSeed{1});
  const ShapleyExplanation b = shapley_sampled(f, d, x, 8000, RngSeed{2});
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(b.standard_error(j) / a.standard_error(j), 0.5, 0.1) << j;
}

TEST(ShapleySampled, SingleFeatureIsExact) {
  const Dataset d = uniform_data(1, 1, 17);
  const Predictor f([](const Matrix& x) -> Vector { return x.col(0).array().exp().matrix(); });
  const ShapleyExplanation e = shapley_sampled(f, d, std::vector<double>{0.3}, 1, RngSeed{5});
  const ShapleyExplanation s = shapley_exact(f, d, std::vector<double>{0.3});
  EXPECT_EQ(e.n_orderings, 1);
  EXPECT_NEAR(e.phi(0), s.phi(0), 1e-15);
  EXPECT_NEAR(s.phi(0), std::exp(0.3) - std::exp(d.features()(0, 0)), 1e-12);
  EXPECT_THROW(shapley_sampled(f, d, std::vector<double>{0.3}, 0, RngSeed{}), Error);
}

TEST(ShapImportance, ConstantAndLinearModels) {
  const Dataset d = sample(find_dgp("linear_independent"), 300, RngSeed{18});
  const Dataset bg = background_sample(d, RngSeed{1}, 100);
  const Dataset ev = background_sample(d, RngSeed{2}, 40);
  const ImportanceResult c = shap_importance(Predictor::constant(1.0), bg, ev, 50, RngSeed{3});
  for (double s : c.scores) EXPECT_EQ(s, 0.0);
  const Vector beta = coef({1.0, 2.0, -1.0});
  const ImportanceResult r = shap_importance(Predictor::linear(beta), bg, ev, 400, RngSeed{3});
  const Vector mu = bg.features().colwise().mean();
  for (Index j = 0; j < 3; ++j) {
    const double want = std::abs(beta(j)) * (ev.features().col(j).array() - mu(j)).abs().mean();
    EXPECT_NEAR(r.scores[static_cast<std::size_t>(j)], want, 0.1 * want) << j;
  }
}

TEST(ShapImportance, Fig2RankingDivergesFromPfi) {
  const DgpSpec spec = find_dgp("fig2_noise");
  const Dataset train = sample(spec, 100, RngSeed{1});
  const Dataset test = sample(spec, 2000, RngSeed{2});
  const FittedModel m = fit(forest_spec(50), train, RngSeed{3});
  const ImportanceResult p = pfi(m.predictor(), test, Loss(), 10, RngSeed{4});
  const ImportanceResult s = shap_importance(m.predictor(), background_sample(train, RngSeed{5}, 50),
                                             background_sample(test, RngSeed{6}, 20), 100, RngSeed{7});
  std::vector<std::size_t> order(20);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.scores[a] > s.scores[b]; });
  bool found = false;
  for (std::size_t r = 0; r < 5; ++r) found = found || p.band_contains(order[r], 0.0);
  EXPECT_TRUE(found);
  for (double v : s.scores) EXPECT_GT(v, 0.0);
}

TEST(Sage, ConditionalModeCreditsTheWholeChain) {
  const Dataset d = sample(find_dgp("chain_scm"), 2000, RngSeed{19});
  SageOptions o;
  o.n_orderings = 256;
  o.imputation_samples = 8;
  const ImportanceResult r = sage(fig4_predictor(), d, Loss(), SageMode::conditional, o, RngSeed{1});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_GT(r.scores[j], 0.0) << j;
  const ImportanceResult mg = sage(fig4_predictor(), d, Loss(), SageMode::marginal, o, RngSeed{1});
  EXPECT_EQ(mg.scores[0], 0.0);
  EXPECT_GT(mg.q05[2], 0.0);
}

TEST(Sage, ValuesSumToTotalLossReduction) {
  const Dataset d = sample(find_dgp("fig5_masked"), 600, RngSeed{20});
  const Predictor f = oracle_predictor("fig5_masked");
  SageOptions o;
  o.n_orderings = 2048;
  o.imputation_samples = 16;
  o.batches = 32;
  const double total = sage_total_value(f, d, Loss(), 16, RngSeed{3});
  for (auto mode : {SageMode::marginal, SageMode::conditional}) {
    const ImportanceResult r = sage(f, d, Loss(), mode, o, RngSeed{2});
    double sum = 0.0;
    for (double v : r.scores) sum += v;
    // Each ordering telescopes to one draw of the total, so the batch sums carry its sampling error.
    std::vector<double> batch_sums(r.replicates[0].size(), 0.0);
    for (const auto& rep : r.replicates) {
      for (std::size_t b = 0; b < rep.size(); ++b) batch_sums[b] += rep[b];
    }
    const double se = std::sqrt(sample_variance(batch_sums) / static_cast<double>(batch_sums.size()));
    EXPECT_LT(se, 0.1 * total);
    EXPECT_NEAR(sum, total, 3.0 * se);
  }
  o.n_orderings = 0;
  EXPECT_THROW(sage(f, d, Loss(), SageMode::marginal, o, RngSeed{}), Error);
}

TEST(GroupedPfi, SingletonGroupsReproducePfi) {
  const Dataset d = sample(find_dgp("fig5_masked"), 150, RngSeed{21});
  const Predictor f = oracle_predictor("fig5_masked");
  const ImportanceResult m = pfi(f, d, Loss(), 4, RngSeed{8});
  const ImportanceResult g = grouped_pfi(f, d, Loss(), {{"a", {0}}, {"b", {1}}, {"c", {2}}}, 4, RngSeed{8});
  EXPECT_EQ(g.unit, ImportanceUnit::group);
  EXPECT_EQ(g.names, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(g.replicates, m.replicates);
}

TEST(GroupedPfi, TrivialPartitionPermutesWholeRows) {
  const Dataset d = sample(find_dgp("fig5_masked"), 100, RngSeed{22});
  const Predictor f = oracle_predictor("fig5_masked");
  const ImportanceResult g = grouped_pfi(f, d, Loss(), {{"all", {0, 1, 2}}}, 3, RngSeed{4});
  const double baseline = evaluate(f, d, Loss());
  for (std::uint64_t r = 0; r < 3; ++r) {
    auto rng = make_rng(derive_seed(RngSeed{4}, 0, r));
    const auto perm = random_permutation(d.n(), rng);
    Matrix x(d.n(), 3);
    for (Index i = 0; i < d.n(); ++i) x.row(i) = d.features().row(perm[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(g.replicates[0][r], Loss()(d.target(), f.predict(x)) - baseline, 1e-12);
  }
}

TEST(GroupedPfi, DuplicateGroupExceedsIndividualConditionalScores) {
  const Dataset d = duplicated_data(1000, 23);
  const Predictor f = Predictor::linear(coef({1.0, 1.0, 0.0}));
  const ImportanceResult g = grouped_pfi(f, d, Loss(), {{"pair", {0, 1}}, {"noise", {2}}}, 5, RngSeed{1});
  const ImportanceResult c = cfi_all(f, d, Loss(), default_max_leaves(d.n()), 5, RngSeed{1});
  EXPECT_GT(g.scores[0], c.scores[0] + c.scores[1]);
  EXPECT_EQ(g.scores[1], 0.0);
}

TEST(GroupedPfi, RejectsBadGroups) {
  const Dataset d = sample(find_dgp("fig5_masked"), 20, RngSeed{24});
  const Predictor f = Predictor::constant(0.0);
  EXPECT_THROW(grouped_pfi(f, d, Loss(), {{"a", {0, 1}}, {"b", {1}}}, 1, RngSeed{}), Error);
  EXPECT_THROW(grouped_pfi(f, d, Loss(), {{"a", {}}}, 1, RngSeed{}), Error);
  EXPECT_THROW(grouped_pfi(f, d, Loss(), {{"a", {3}}}, 1, RngSeed{}), Error);
  EXPECT_THROW(grouped_pfi(f, d, Loss(), {}, 1, RngSeed{}), Error);
}

TEST(ImportanceCsv, HeaderAndRows) {
  const ImportanceResult r = ImportanceResult::from_replicates(ImportanceUnit::feature, {"a", "b"}, {{1, 2, 3}, {0, 0, 0}});
  const auto path = std::filesystem::temp_directory_path() / "iml_importance.csv";
  write_importance_csv(r, path);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  std::filesystem::remove(path);
  EXPECT_EQ(header, "name,score,q05,q95");
  EXPECT_EQ(first.substr(0, 4), "a,2,");
}
