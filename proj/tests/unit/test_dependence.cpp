#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "iml/dependence.hpp"
#include "iml/dgp.hpp"
#include "oracles.hpp"

using namespace iml;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(RngSeed{seed});
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

double median_distance(const std::vector<double>& v) {
  std::vector<double> d;
  for (std::size_t a = 0; a < v.size(); ++a) {
    for (std::size_t b = a + 1; b < v.size(); ++b) d.push_back(std::abs(v[a] - v[b]));
  }
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  return m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

// (1/n^2) trace(K H L H) with exp(-d^2 / (2 s^2)) kernels, s the median distance.
double hsic_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Index>(x.size());
  const double sx = median_distance(x), sy = median_distance(y);
  Matrix k(n, n), l(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      const double dx = x[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(b)];
      const double dy = y[static_cast<std::size_t>(a)] - y[static_cast<std::size_t>(b)];
      k(a, b) = std::exp(-dx * dx / (2 * sx * sx));
      l(a, b) = std::exp(-dy * dy / (2 * sy * sy));
    }
  }
  const Matrix h = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  return (k * h * l * h).trace() / static_cast<double>(n * n);
}

std::vector<double> column(const Dataset& d, Index j) { return column_values(d.features(), j); }

}  // namespace

TEST(Correlation, LinearAndMonotone) {
  const auto x = normals(50, 1);
  std::vector<double> lin, ex;
  for (double v : x) {
    lin.push_back(2 * v + 1);
    ex.push_back(std::exp(v));
  }
  EXPECT_NEAR(pearson(x, lin), 1.0, 1e-12);
  EXPECT_NEAR(spearman(x, lin), 1.0, 1e-12);
  EXPECT_NEAR(spearman(x, ex), 1.0, 1e-12);
  EXPECT_LT(pearson(x, ex), 0.99);
  const auto y = normals(50, 2);
  EXPECT_NEAR(pearson(x, y), oracle::pearson(x, y), 1e-12);
}

TEST(Correlation, AverageRanksAndTies) {
  const std::vector<double> v = {3, 1, 3, 2, 3};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{4, 1, 4, 2, 4}));
  const std::vector<double> w = {1, 2, 3, 4, 5};
  EXPECT_NEAR(spearman(v, w), oracle::pearson(average_ranks(v), w), 1e-12);
}

TEST(Correlation, Errors) {
  const std::vector<double> c = {1, 1, 1, 1};
  const std::vector<double> v = {1, 2, 3, 4};
  EXPECT_THROW(pearson(c, v), Error);
  EXPECT_THROW(spearman(v, c), Error);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(pearson(v, std::vector<double>{1, 2, 3}), Error);
}

TEST(Correlation, RingHasNoLinearSignal) {
  const Dataset d = sample(find_dgp("ring_dependence"), 2000, RngSeed{3});
  EXPECT_LT(std::abs(pearson(column(d, 0), column(d, 1))), 0.05);
}

TEST(Hsic, MatchesMatrixFormula) {
  const auto x = normals(40, 4);
  auto y = normals(40, 5);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i] * x[i];
  EXPECT_NEAR(hsic(x, y).value, hsic_oracle(x, y), 1e-12);
}

TEST(Hsic, SymmetricShiftInvariantNonnegative) {
  const auto x = normals(60, 6);
  const auto y = normals(60, 7);
  std::vector<double> xs = x, ys = y;
  for (auto& v : xs) v += 100.0;
  for (auto& v : ys) v -= 3.0;
  const double h = hsic(x, y).value;
  EXPECT_GE(h, 0.0);
  EXPECT_NEAR(h, hsic(y, x).value, 1e-12);
  EXPECT_NEAR(h, hsic(xs, ys).value, 1e-12);
}

TEST(Hsic, IdentityBeatsIndependentPairing) {
  const auto x = normals(200, 8);
  const auto y = normals(200, 9);
  EXPECT_GT(hsic(x, x).value, 5.0 * hsic(x, y).value);
}

TEST(Hsic, DegenerateAndShortInput) {
  const std::vector<double> c(20, 1.0);
  const auto x = normals(20, 10);
  const HsicValue h = hsic(c, x);
  EXPECT_TRUE(h.degenerate);
  EXPECT_EQ(h.value, 0.0);
  EXPECT_THROW(hsic(normals(9, 1), normals(9, 2)), Error);
}

TEST(IndependenceTest, RingSeparatesPearsonFromHsic) {
  const Dataset d = sample(find_dgp("ring_dependence"), 500, RngSeed{11});
  const auto a = column(d, 0), b = column(d, 1);
  EXPECT_GT(independence_test(a, b, DependenceStatistic::pearson, 500, RngSeed{1}), 0.05);
  EXPECT_LT(independence_test(a, b, DependenceStatistic::hsic, 500, RngSeed{1}), 0.05);
}

TEST(IndependenceTest, PValueSmoothingAndErrors) {
  const auto x = normals(30, 12);
  const double p = independence_test(x, x, DependenceStatistic::pearson, 99, RngSeed{1});
  EXPECT_DOUBLE_EQ(p, 1.0 / 100.0);
  const auto y = normals(30, 13);
  for (auto s : {DependenceStatistic::pearson, DependenceStatistic::hsic}) {
    const double q = independence_test(x, y, s, 199, RngSeed{2});
    EXPECT_GT(q, 0.0);
    EXPECT_LE(q, 1.0);
    EXPECT_DOUBLE_EQ(q * 200.0, std::round(q * 200.0));
  }
  EXPECT_THROW(independence_test(x, y, DependenceStatistic::pearson, 98, RngSeed{}), Error);
}

TEST(IndependenceTest, CalibratedUnderTheNull) {
  for (auto s : {DependenceStatistic::pearson, DependenceStatistic::hsic}) {
    int rejections = 0;
    for (std::uint64_t r = 0; r < 200; ++r) {
      const auto x = normals(40, 1000 + 2 * r);
      const auto y = normals(40, 1001 + 2 * r);
      if (independence_test(x, y, s, 99, RngSeed{r}) <= 0.05) ++rejections;
    }
    EXPECT_NEAR(rejections / 200.0, 0.05, 0.04);
  }
}

TEST(DependenceMatrix, AllPairsAndCsv) {
  const Dataset d = sample(find_dgp("fig6_flat"), 60, RngSeed{14});
  const auto pairs = dependence_matrix(d, 99, RngSeed{1});
  ASSERT_EQ(pairs.size(), 45u);
  EXPECT_EQ(pairs[0].feature_a, "X1");
  EXPECT_EQ(pairs[0].feature_b, "X2");
  for (const auto& p : pairs) {
    EXPECT_LE(std::abs(p.report.pearson), 1.0);
    EXPECT_LE(std::abs(p.report.spearman), 1.0);
    EXPECT_GE(p.report.hsic, 0.0);
    EXPECT_GT(p.report.hsic_p, 0.0);
    EXPECT_EQ(p.report.n_permutations, 99);
  }
  const auto path = std::filesystem::temp_directory_path() / "iml_dep.csv";
  write_dependence_csv(pairs, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  std::filesystem::remove(path);
  EXPECT_EQ(header, "feature_a,feature_b,pearson,spearman,hsic,hsic_p");
}

TEST(Perturbation, CountsAndPermutationMultiset) {
  Matrix x(3, 2);
  x << 1, 10, 2, 20, 4, 30;
  const Dataset d(x, Vector::Zero(3));
  EXPECT_EQ(perturbation_points(d, 0, Perturbation::equidistant, 2).rows(), 6);
  EXPECT_EQ(perturbation_points(d, 0, Perturbation::quantile, 2).rows(), 6);
  const Matrix p = perturbation_points(d, 0, Perturbation::permutation, 2, RngSeed{3});
  ASSERT_EQ(p.rows(), 3);
  auto a = column_values(p, 0);
  std::sort(a.begin(), a.end());
  EXPECT_EQ(a, (std::vector<double>{1, 2, 4}));
  EXPECT_EQ(column_values(p, 1), column_values(x, 1));
}

TEST(Perturbation, EquidistantOnSkewedFeatureLeavesTheData) {
  auto rng = make_rng(RngSeed{15});
  std::exponential_distribution<double> e(1.0);
  Matrix x(300, 1);
  for (Index i = 0; i < 300; ++i) x(i, 0) = e(rng);
  const Dataset d(x, Vector::Zero(300));
  const Matrix pts = perturbation_points(d, 0, Perturbation::equidistant, 20);
  auto col = column_values(x, 0);
  int unseen = 0;
  for (Index i = 0; i < pts.rows(); ++i) {
    if (std::find(col.begin(), col.end(), pts(i, 0)) == col.end()) ++unseen;
  }
  EXPECT_GT(unseen, 0);
}

TEST(Extrapolation, TrainingPointsScoreZero) {
  const Dataset d = sample(find_dgp("fig6_flat"), 200, RngSeed{16});
  const ExtrapolationReport r = extrapolation_score(d, d.features());
  EXPECT_EQ(r.score, 0.0);
  EXPECT_EQ(r.flagged_points.rows(), 0);
  EXPECT_GT(r.threshold_distance, 0.0);
  const std::vector<Index> one = {0};
  EXPECT_THROW(extrapolation_score(d.rows(one), d.features()), Error);
  EXPECT_THROW(extrapolation_score(d, d.features(), 1.0), Error);
  EXPECT_THROW(extrapolation_score(d, d.features(), 0.0), Error);
}

TEST(Extrapolation, CorrelatedEquidistantExceedsQuantile) {
  const Dataset d = sample(find_dgp("correlated_gaussian"), 500, RngSeed{17});
  const double eq = extrapolation_score(d, perturbation_points(d, 0, Perturbation::equidistant)).score;
  const double qu = extrapolation_score(d, perturbation_points(d, 0, Perturbation::quantile)).score;
  EXPECT_GT(eq, qu + 0.1);
}

TEST(Extrapolation, IndependentSubsampleNearNominalRate) {
  const Dataset train = sample(find_dgp("linear_independent"), 400, RngSeed{18});
  const double s = extrapolation_score(train, perturbation_points(train, 0, Perturbation::subsample, 20, RngSeed{2})).score;
  EXPECT_NEAR(s, 0.05, 0.05);
}

TEST(Extrapolation, MonotoneInQuantile) {
  const Dataset d = sample(find_dgp("correlated_gaussian"), 300, RngSeed{19});
  const Matrix pts = perturbation_points(d, 1, Perturbation::equidistant);
  double prev = 1.0;
  for (double q : {0.5, 0.7, 0.9, 0.95, 0.99}) {
    const ExtrapolationReport r = extrapolation_score(d, pts, q);
    EXPECT_LE(r.score, prev);
    EXPECT_GE(r.score, 0.0);
    EXPECT_EQ(r.flagged_points.rows(), static_cast<Index>(std::llround(r.score * static_cast<double>(pts.rows()))));
    prev = r.score;
  }
}
