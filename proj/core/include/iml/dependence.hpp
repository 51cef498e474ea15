#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "iml/core.hpp"

namespace iml {

double pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);
// Average ranks (1-based), ties share their mean rank.
std::vector<double> average_ranks(std::span<const double> x);

struct HsicValue {
  double value = 0.0;
  bool degenerate = false;  // a constant input; value forced to 0
};

// Biased V-statistic (1/n^2) trace(K H L H) with Gaussian kernels whose
// widths are the median pairwise distances of x and y.
HsicValue hsic(std::span<const double> x, std::span<const double> y);

enum class DependenceStatistic { pearson, hsic };

inline constexpr int kMinPermutations = 99;

// (1 + #{permuted statistic >= observed}) / (n_permutations + 1); pearson is
// two-sided through |r|.
double independence_test(std::span<const double> x, std::span<const double> y,
                         DependenceStatistic statistic, int n_permutations, RngSeed seed);

struct DependenceReport {
  double pearson = 0.0;
  double spearman = 0.0;
  double hsic = 0.0;
  double pearson_p = 1.0;
  double hsic_p = 1.0;
  int n_permutations = 0;
  bool hsic_degenerate = false;
};

DependenceReport dependence_report(std::span<const double> x, std::span<const double> y,
                                   int n_permutations, RngSeed seed);

struct PairDependence {
  std::string feature_a;
  std::string feature_b;
  DependenceReport report;
};

// Every feature pair j < k.
std::vector<PairDependence> dependence_matrix(const Dataset& data, int n_permutations, RngSeed seed);

// feature_a,feature_b,pearson,spearman,hsic,hsic_p
void write_dependence_csv(const std::vector<PairDependence>& pairs, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Extrapolation diagnostics

enum class Perturbation { equidistant, quantile, subsample, permutation };

std::string_view to_string(Perturbation strategy);
Perturbation parse_perturbation(std::string_view name);

// Synthetic points a perturbation method evaluates: grid strategies copy every
// row once per grid value; permutation replaces feature j by one random
// permutation of its column.
Matrix perturbation_points(const Dataset& data, Index feature_index, Perturbation strategy,
                           int size = kDefaultGridSize, RngSeed seed = {});

struct ExtrapolationReport {
  Perturbation strategy = Perturbation::quantile;
  double score = 0.0;  // fraction of synthetic points flagged
  double threshold_distance = 0.0;
  Matrix flagged_points;
};

inline constexpr double kDefaultExtrapolationQuantile = 0.95;

// Distances use per-feature standardization by the training standard
// deviation. The threshold is the given quantile of training leave-one-out
// nearest-neighbour distances; a synthetic point is flagged when its nearest
// training point is farther than the threshold.
ExtrapolationReport extrapolation_score(const Dataset& train, const Matrix& synthetic_points,
                                        double quantile = kDefaultExtrapolationQuantile);

}  // namespace iml
