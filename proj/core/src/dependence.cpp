#include "iml/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csv_util.hpp"
#include "iml/parallel.hpp"

namespace iml {
namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("dependence inputs differ in length");
  if (x.size() < 3) throw Error("dependence measures need at least three observations");
}

double median_distance(std::span<const double> v) {
  std::vector<double> d;
  d.reserve(v.size() * (v.size() - 1) / 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t k = i + 1; k < v.size(); ++k) d.push_back(std::abs(v[i] - v[k]));
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  if (med > 0.0) return med;
  double sum = 0.0;
  for (double x : d) sum += x;
  return sum / static_cast<double>(d.size());
}

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// H K H for the Gaussian kernel with median-heuristic width.
Matrix centered_gram(std::span<const double> v) {
  const auto n = static_cast<Index>(v.size());
  const double sigma = median_distance(v);
  const double scale = -0.5 / (sigma * sigma);
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double d = v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
      k(i, j) = std::exp(scale * d * d);
    }
  }
  const Vector col_mean = k.colwise().mean();
  const double total = col_mean.mean();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) k(i, j) += total - col_mean(i) - col_mean(j);
  }
  return k;
}

double permuted_trace(const Matrix& kc, const Matrix& lc, const std::vector<Index>& perm) {
  const Index n = kc.rows();
  double s = 0.0;
  for (Index j = 0; j < n; ++j) {
    const Index pj = perm[static_cast<std::size_t>(j)];
    for (Index i = 0; i < n; ++i) s += kc(i, j) * lc(perm[static_cast<std::size_t>(i)], pj);
  }
  return s / static_cast<double>(n * n);
}

bool at_least(double value, double observed) {
  return value >= observed - 1e-12 * std::max(1.0, std::abs(observed));
}

void check_permutations(int n_permutations) {
  if (n_permutations < kMinPermutations) {
    throw Error("independence tests need at least " + std::to_string(kMinPermutations) +
                " permutations");
  }
}

double pearson_p(std::span<const double> x, std::span<const double> y, int n_permutations,
                 RngSeed seed) {
  const double observed = std::abs(pearson(x, y));
  auto rng = make_rng(seed);
  std::vector<double> shuffled(y.size());
  int hits = 0;
  for (int b = 0; b < n_permutations; ++b) {
    const auto perm = random_permutation(static_cast<Index>(y.size()), rng);
    for (std::size_t i = 0; i < y.size(); ++i) shuffled[i] = y[static_cast<std::size_t>(perm[i])];
    if (at_least(std::abs(pearson(x, shuffled)), observed)) ++hits;
  }
  return (1.0 + hits) / (n_permutations + 1.0);
}

double hsic_p(std::span<const double> x, std::span<const double> y, int n_permutations,
              RngSeed seed) {
  if (constant(x) || constant(y)) return 1.0;
  const Matrix kc = centered_gram(x);
  const Matrix lc = centered_gram(y);
  std::vector<Index> identity(x.size());
  std::iota(identity.begin(), identity.end(), Index{0});
  const double observed = permuted_trace(kc, lc, identity);
  auto rng = make_rng(seed);
  int hits = 0;
  for (int b = 0; b < n_permutations; ++b) {
    if (at_least(permuted_trace(kc, lc, random_permutation(static_cast<Index>(x.size()), rng)), observed)) {
      ++hits;
    }
  }
  return (1.0 + hits) / (n_permutations + 1.0);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw Error("correlation of a constant input is undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t k = i;
    while (k + 1 < order.size() && x[order[k + 1]] == x[order[i]]) ++k;
    const double r = 0.5 * static_cast<double>(i + k) + 1.0;
    for (std::size_t m = i; m <= k; ++m) ranks[order[m]] = r;
    i = k + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

HsicValue hsic(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  if (x.size() < 10) throw Error("hsic needs at least ten observations");
  if (constant(x) || constant(y)) return {0.0, true};
  const Matrix kc = centered_gram(x);
  const Matrix lc = centered_gram(y);
  const auto n = static_cast<double>(x.size());
  return {std::max(0.0, kc.cwiseProduct(lc).sum() / (n * n)), false};
}

double independence_test(std::span<const double> x, std::span<const double> y,
                         DependenceStatistic statistic, int n_permutations, RngSeed seed) {
  check_pair(x, y);
  check_permutations(n_permutations);
  if (statistic == DependenceStatistic::hsic && x.size() < 10) {
    throw Error("hsic needs at least ten observations");
  }
  return statistic == DependenceStatistic::pearson ? pearson_p(x, y, n_permutations, seed)
                                                   : hsic_p(x, y, n_permutations, seed);
}

DependenceReport dependence_report(std::span<const double> x, std::span<const double> y,
                                   int n_permutations, RngSeed seed) {
  check_pair(x, y);
  check_permutations(n_permutations);
  DependenceReport r;
  r.pearson = pearson(x, y);
  r.spearman = spearman(x, y);
  const auto h = hsic(x, y);
  r.hsic = h.value;
  r.hsic_degenerate = h.degenerate;
  r.pearson_p = pearson_p(x, y, n_permutations, derive_seed(seed, 0));
  r.hsic_p = hsic_p(x, y, n_permutations, derive_seed(seed, 1));
  r.n_permutations = n_permutations;
  return r;
}

std::vector<PairDependence> dependence_matrix(const Dataset& data, int n_permutations, RngSeed seed) {
  check_permutations(n_permutations);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index a = 0; a < data.p(); ++a) {
    for (Index b = a + 1; b < data.p(); ++b) pairs.emplace_back(a, b);
  }
  std::vector<PairDependence> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t t) {
    const auto [a, b] = pairs[t];
    const auto xa = column_values(data.features(), a);
    const auto xb = column_values(data.features(), b);
    out[t] = {data.feature_name(a), data.feature_name(b),
              dependence_report(xa, xb, n_permutations,
                                derive_seed(seed, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)))};
  });
  return out;
}

void write_dependence_csv(const std::vector<PairDependence>& pairs, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "feature_a,feature_b,pearson,spearman,hsic,hsic_p\n";
  for (const auto& p : pairs) {
    out << p.feature_a << ',' << p.feature_b << ',' << detail::fmt(p.report.pearson) << ','
        << detail::fmt(p.report.spearman) << ',' << detail::fmt(p.report.hsic) << ','
        << detail::fmt(p.report.hsic_p) << '\n';
  }
}

std::string_view to_string(Perturbation strategy) {
  switch (strategy) {
    case Perturbation::equidistant: return "equidistant";
    case Perturbation::quantile: return "quantile";
    case Perturbation::subsample: return "subsample";
    case Perturbation::permutation: return "permutation";
  }
  return "quantile";
}

Perturbation parse_perturbation(std::string_view name) {
  if (name == "equidistant") return Perturbation::equidistant;
  if (name == "quantile") return Perturbation::quantile;
  if (name == "subsample") return Perturbation::subsample;
  if (name == "permutation" || name == "permuted") return Perturbation::permutation;
  throw Error("unknown perturbation strategy '" + std::string(name) + "'");
}

Matrix perturbation_points(const Dataset& data, Index feature_index, Perturbation strategy, int size,
                           RngSeed seed) {
  if (feature_index < 0 || feature_index >= data.p()) throw Error("feature index out of range");
  const Matrix& x = data.features();
  if (strategy == Perturbation::permutation) {
    auto rng = make_rng(seed);
    const auto perm = random_permutation(data.n(), rng);
    Matrix out = x;
    for (Index i = 0; i < data.n(); ++i) {
      out(i, feature_index) = x(perm[static_cast<std::size_t>(i)], feature_index);
    }
    return out;
  }
  const GridStrategy gs = strategy == Perturbation::equidistant ? GridStrategy::equidistant
                          : strategy == Perturbation::quantile  ? GridStrategy::quantile
                                                                : GridStrategy::subsample;
  const Grid grid = build_grid(data, feature_index, gs, size, seed);
  const Index n = data.n();
  const auto g_count = static_cast<Index>(grid.size());
  Matrix out(n * g_count, data.p());
  for (Index g = 0; g < g_count; ++g) {
    out.middleRows(g * n, n) = x;
    out.block(g * n, feature_index, n, 1).setConstant(grid.values[static_cast<std::size_t>(g)]);
  }
  return out;
}

ExtrapolationReport extrapolation_score(const Dataset& train, const Matrix& synthetic_points,
                                        double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) throw Error("extrapolation quantile must lie in (0, 1)");
  if (train.n() < 2) throw Error("extrapolation score needs at least two training rows");
  if (synthetic_points.cols() != train.p()) throw Error("synthetic points have the wrong number of columns");
  const Index n = train.n();
  const Index p = train.p();
  Vector scale(p);
  for (Index j = 0; j < p; ++j) {
    const auto col = column_values(train.features(), j);
    const double sd = std::sqrt(sample_variance(col));
    scale(j) = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  const Matrix z = train.features() * scale.asDiagonal();
  const Matrix s = synthetic_points * scale.asDiagonal();

  auto nearest = [&](const Eigen::Ref<const Eigen::RowVectorXd>& point, Index skip) {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (i == skip) continue;
      best = std::min(best, (z.row(i) - point).squaredNorm());
    }
    return std::sqrt(best);
  };

  std::vector<double> loo(static_cast<std::size_t>(n));
  parallel_for(loo.size(), [&](std::size_t i) {
    loo[i] = nearest(z.row(static_cast<Index>(i)), static_cast<Index>(i));
  });
  std::sort(loo.begin(), loo.end());

  ExtrapolationReport r;
  r.threshold_distance = quantile_sorted(loo, quantile);
  std::vector<char> flagged(static_cast<std::size_t>(s.rows()));
  parallel_for(flagged.size(), [&](std::size_t i) {
    flagged[i] = nearest(s.row(static_cast<Index>(i)), -1) > r.threshold_distance ? 1 : 0;
  });
  const auto count = std::count(flagged.begin(), flagged.end(), char{1});
  r.score = s.rows() > 0 ? static_cast<double>(count) / static_cast<double>(s.rows()) : 0.0;
  r.flagged_points.resize(count, p);
  Index row = 0;
  for (Index i = 0; i < s.rows(); ++i) {
    if (flagged[static_cast<std::size_t>(i)]) r.flagged_points.row(row++) = synthetic_points.row(i);
  }
  return r;
}

}  // namespace iml
