#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "iml/dgp.hpp"
#include "iml/learners.hpp"
#include "iml/tree.hpp"

using namespace iml;

namespace {

Dataset make_data(Index n, Index p, std::uint64_t seed, const std::function<double(const Vector&)>& f,
                    double noise = 0.0) {
  auto rng = make_rng(RngSeed{seed});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> e(0.0, 1.0);
  Matrix x(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = u(rng);
    y(i) = f(x.row(i).transpose()) + noise * e(rng);
  }
  return Dataset(x, y);
}

}  // namespace

TEST(Ols, RecoversNoiseFreeCoefficients) {
  const Dataset d = make_data(60, 3, 1, [](const Vector& x) { return 1.5 - 2.0 * x(0) + 0.5 * x(1) + 3.0 * x(2); });
  const FittedModel m = fit(ols_spec(), d, RngSeed{});
  const Vector c = *m.linear_coefficients();
  EXPECT_NEAR(c(0), -2.0, 1e-10);
  EXPECT_NEAR(c(1), 0.5, 1e-10);
  EXPECT_NEAR(c(2), 3.0, 1e-10);
  EXPECT_NEAR(*m.linear_intercept(), 1.5, 1e-10);
  EXPECT_FALSE(m.kernel_gamma().has_value());
}

TEST(Ols, MatchesNormalEquations) {
  const Dataset d = make_data(80, 4, 2, [](const Vector& x) { return x.sum(); }, 0.5);
  Matrix design(d.n(), d.p() + 1);
  design << d.features(), Vector::Ones(d.n());
  const Vector beta = (design.transpose() * design).inverse() * design.transpose() * d.target();
  const FittedModel m = fit(ols_spec(), d, RngSeed{});
  EXPECT_TRUE(m.linear_coefficients()->isApprox(beta.head(4), 1e-9));
  EXPECT_NEAR(*m.linear_intercept(), beta(4), 1e-9);
}

TEST(Knn, AgreesWithBruteForceNeighbours) {
  const Dataset d = make_data(50, 2, 3, [](const Vector& x) { return x(0) * x(1); }, 0.1);
  const Dataset q = make_data(10, 2, 4, [](const Vector&) { return 0.0; });
  const FittedModel m = fit(knn_spec(4), d, RngSeed{});
  const Vector got = m.predict(q.features());
  for (Index i = 0; i < q.n(); ++i) {
    std::vector<std::pair<double, Index>> dist;
    for (Index t = 0; t < d.n(); ++t) dist.push_back({(d.features().row(t) - q.features().row(i)).norm(), t});
    std::sort(dist.begin(), dist.end());
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += d.target()(dist[static_cast<std::size_t>(k)].second);
    EXPECT_NEAR(got(i), s / 4.0, 1e-12);
  }
}

TEST(Knn, OneNeighbourInterpolatesTraining) {
  const Dataset d = make_data(30, 2, 5, [](const Vector& x) { return x(0); }, 1.0);
  const FittedModel m = fit(knn_spec(1), d, RngSeed{});
  EXPECT_TRUE(m.predict(d.features()).isApprox(d.target(), 1e-14));
  EXPECT_THROW(fit(knn_spec(31), d, RngSeed{}), Error);
}

TEST(KernelRidge, MatchesClosedFormSolution) {
  const Dataset d = make_data(40, 2, 6, [](const Vector& x) { return std::sin(3 * x(0)) + x(1); }, 0.2);
  const double gamma = 0.7;
  const double lambda = 0.3;
  const FittedModel m = fit(kernel_ridge_spec(lambda, gamma), d, RngSeed{});
  const Matrix& x = d.features();
  Matrix k(d.n(), d.n());
  for (Index a = 0; a < d.n(); ++a) {
    for (Index b = 0; b < d.n(); ++b) k(a, b) = std::exp(-gamma * (x.row(a) - x.row(b)).squaredNorm());
  }
  const double ybar = d.target().mean();
  const Vector alpha = (k + lambda * Matrix::Identity(d.n(), d.n())).inverse() * (d.target().array() - ybar).matrix();
  const Dataset q = make_data(7, 2, 7, [](const Vector&) { return 0.0; });
  for (Index i = 0; i < q.n(); ++i) {
    double f = ybar;
    for (Index t = 0; t < d.n(); ++t) f += alpha(t) * std::exp(-gamma * (q.features().row(i) - x.row(t)).squaredNorm());
    EXPECT_NEAR(m.predict(q.features())(i), f, 1e-9);
  }
  EXPECT_DOUBLE_EQ(*m.kernel_gamma(), gamma);
}

TEST(KernelRidge, MedianHeuristicWidth) {
  const Dataset d = make_data(30, 2, 8, [](const Vector& x) { return x(0); });
  std::vector<double> dist;
  for (Index a = 0; a < d.n(); ++a) {
    for (Index b = a + 1; b < d.n(); ++b) dist.push_back((d.features().row(a) - d.features().row(b)).norm());
  }
  std::sort(dist.begin(), dist.end());
  const std::size_t m = dist.size();
  const double med = m % 2 ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
  EXPECT_NEAR(median_pairwise_distance(d.features()), med, 1e-12);
  const FittedModel fitted = fit(kernel_ridge_spec(1.0), d, RngSeed{});
  EXPECT_NEAR(*fitted.kernel_gamma(), 1.0 / (2.0 * med * med), 1e-12);
}

TEST(Forest, SameSeedSamePredictions) {
  const Dataset d = make_data(200, 3, 9, [](const Vector& x) { return x(0) > 0 ? 1.0 : -1.0; }, 0.1);
  const FittedModel a = fit(forest_spec(30), d, RngSeed{5});
  const FittedModel b = fit(forest_spec(30), d, RngSeed{5});
  const FittedModel c = fit(forest_spec(30), d, RngSeed{6});
  EXPECT_EQ(a.predict(d.features()), b.predict(d.features()));
  EXPECT_NE(a.predict(d.features()), c.predict(d.features()));
}

TEST(Forest, LearnsAStepFunction) {
  const Dataset d = make_data(400, 2, 10, [](const Vector& x) { return x(0) > 0 ? 2.0 : -2.0; }, 0.1);
  const FittedModel m = fit(forest_spec(50, 0, 2), d, RngSeed{1});
  Matrix q(2, 2);
  q << 0.5, 0.0, -0.5, 0.0;
  const Vector f = m.predict(q);
  EXPECT_NEAR(f(0), 2.0, 0.2);
  EXPECT_NEAR(f(1), -2.0, 0.2);
}

TEST(Forest, DeepTreesWithoutBootstrapInterpolate) {
  const Dataset d = make_data(60, 2, 11, [](const Vector& x) { return x(0); }, 1.0);
  LearnerSpec spec = forest_spec(3, 0, 2);
  spec.bootstrap = false;
  const FittedModel m = fit(spec, d, RngSeed{1});
  EXPECT_TRUE(m.predict(d.features()).isApprox(d.target(), 1e-12));
}

TEST(Forest, RejectsWrongWidth) {
  const Dataset d = make_data(20, 2, 12, [](const Vector& x) { return x(0); });
  const FittedModel m = fit(forest_spec(2), d, RngSeed{1});
  EXPECT_THROW(m.predict(Matrix::Zero(3, 3)), Error);
}

TEST(LearnerSpec, ParamsRoundTripAndValidation) {
  const LearnerSpec rf = LearnerSpec::from_params(
      "random_forest", {{"trees", "12"}, {"mtry", "2"}, {"min_leaf", "3"}, {"bootstrap", "false"}});
  EXPECT_EQ(rf.n_trees, 12);
  EXPECT_EQ(rf.features_per_split, 2);
  EXPECT_EQ(rf.min_leaf, 3);
  EXPECT_FALSE(rf.bootstrap);
  const LearnerSpec back = LearnerSpec::from_params("random_forest", rf.to_params());
  EXPECT_EQ(back.to_params(), rf.to_params());

  const LearnerSpec krr = LearnerSpec::from_params("kernel_ridge_rbf", {{"lambda", "0.5"}, {"gamma", "median"}});
  EXPECT_DOUBLE_EQ(krr.ridge_lambda, 0.5);
  EXPECT_FALSE(krr.gamma.has_value());

  EXPECT_THROW(LearnerSpec::from_params("forest", {}), Error);
  EXPECT_THROW(LearnerSpec::from_params("knn", {{"trees", "3"}}), Error);
  EXPECT_THROW(LearnerSpec::from_params("knn", {{"k", "three"}}), Error);
  EXPECT_THROW(LearnerSpec::from_params("knn", {{"k", "0"}}), Error);
  EXPECT_THROW(LearnerSpec::from_params("kernel_ridge_rbf", {{"lambda", "-1"}}), Error);
  try {
    LearnerSpec::from_params("forest", {});
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("learner.kind", 0), 0u);
  }
}

TEST(Oracle, PredictorEvaluatesTheStructuralMean) {
  const Predictor f = oracle_predictor("fig5_masked");
  Matrix x(2, 3);
  x << 0.5, 0.2, 0.1, 0.5, 0.2, -0.1;
  const Vector y = f(x);
  EXPECT_NEAR(y(0), 1.5 - 1.2 + 2.4, 1e-12);
  EXPECT_NEAR(y(1), 1.5 - 1.2, 1e-12);
}

TEST(Tree, RespectsMinLeafAndDepth) {
  const Dataset d = make_data(300, 2, 13, [](const Vector& x) { return x(0) + x(1); }, 0.1);
  TreeOptions options;
  options.max_depth = 2;
  options.features_per_split = 2;
  std::vector<Index> rows(300);
  std::iota(rows.begin(), rows.end(), Index{0});
  auto rng = make_rng(RngSeed{1});
  const Matrix y = d.target();
  const RegressionTree t = RegressionTree::fit(d.features(), y, rows, options, rng);
  EXPECT_LE(t.n_leaves(), 4);
}

TEST(Tree, BestFirstGrowthHonoursLeafCap) {
  const Dataset d = make_data(500, 3, 14, [](const Vector& x) { return x(0) * x(1) + x(2); }, 0.1);
  TreeOptions options;
  options.max_leaves = 7;
  std::vector<Index> rows(500);
  std::iota(rows.begin(), rows.end(), Index{0});
  auto rng = make_rng(RngSeed{2});
  const Matrix y = d.target();
  const RegressionTree t = RegressionTree::fit(d.features(), y, rows, options, rng);
  EXPECT_EQ(t.n_leaves(), 7);
  for (Index i = 0; i < d.n(); ++i) {
    EXPECT_GE(t.leaf_of(d.features(), i), 0);
    EXPECT_LT(t.leaf_of(d.features(), i), 7);
  }
}

TEST(Tree, CandidateRestrictionLimitsSplitFeatures) {
  const Dataset d = make_data(300, 3, 15, [](const Vector& x) { return x(0) + x(1) + x(2); }, 0.1);
  std::vector<Index> rows(300);
  std::iota(rows.begin(), rows.end(), Index{0});
  auto rng = make_rng(RngSeed{3});
  const Matrix y = d.target();
  const std::vector<Index> candidates = {1};
  const RegressionTree t = RegressionTree::fit(d.features(), y, rows, TreeOptions{}, rng, candidates);
  EXPECT_EQ(t.split_features(), std::vector<Index>{1});
}
