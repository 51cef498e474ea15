#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iml/core.hpp"
#include "iml/tree.hpp"

namespace iml {

enum class ImportanceUnit { feature, group };

struct ImportanceResult {
  ImportanceUnit unit = ImportanceUnit::feature;
  std::vector<std::string> names;
  std::vector<double> scores;                  // mean of replicates
  std::vector<std::vector<double>> replicates;  // per unit
  std::vector<double> q05;
  std::vector<double> q95;
  std::optional<std::vector<double>> p_values;

  std::size_t size() const { return names.size(); }
  bool band_contains(std::size_t unit, double value) const {
    return q05[unit] <= value && value <= q95[unit];
  }
  double half_width(std::size_t unit) const { return 0.5 * (q95[unit] - q05[unit]); }

  // Fills scores and (q05, q95) from the replicates.
  static ImportanceResult from_replicates(ImportanceUnit unit, std::vector<std::string> names,
                                          std::vector<std::vector<double>> replicates);
};

// CSV: name,score,q05,q95[,p_value]
void write_importance_csv(const ImportanceResult& result, const std::filesystem::path& path);

// Marginal permutation importance: loss with column j permuted minus the
// baseline loss, one replicate per repeat.
ImportanceResult pfi(const Predictor& pred, const Dataset& data, const Loss& loss, int repeats,
                     RngSeed seed);

inline constexpr int kConditionalMinLeaf = 20;

// Partition of the observations by a CART tree that predicts the sampled
// feature(s) from all remaining features. Permuting within a leaf approximates
// drawing from the conditional distribution given the remaining features.
class ConditionalSampler {
 public:
  static ConditionalSampler single_leaf(std::vector<Index> features, Index p);

  const std::vector<Index>& features() const { return features_; }
  Index feature_index() const { return features_.front(); }
  int n_leaves() const { return tree_ ? tree_->n_leaves() : 1; }

  // Leaf id of every row of `x`.
  std::vector<int> leaf_of_rows(const Matrix& x) const;
  // Rows of `x` grouped by leaf, each group ascending.
  std::vector<std::vector<Index>> leaves(const Matrix& x) const;

 private:
  friend ConditionalSampler fit_conditional_sampler(const Dataset&, std::vector<Index>, int,
                                                    RngSeed);
  std::vector<Index> features_;
  Index p_ = 0;
  std::shared_ptr<const RegressionTree> tree_;
};

ConditionalSampler fit_conditional_sampler(const Dataset& data, Index feature_index,
                                           int max_leaves, RngSeed seed);
// Joint sampler for a feature set (multi-output tree on standardized columns).
ConditionalSampler fit_conditional_sampler(const Dataset& data, std::vector<Index> features,
                                           int max_leaves, RngSeed seed);

// Default leaf cap: n / kConditionalMinLeaf.
int default_max_leaves(Index n);

// Conditional permutation importance: as pfi, permuting within sampler leaves.
ImportanceResult cfi(const Predictor& pred, const Dataset& data, const Loss& loss,
                     const ConditionalSampler& sampler, int repeats, RngSeed seed);
// cfi for every feature, fitting one sampler per feature on `data`.
ImportanceResult cfi_all(const Predictor& pred, const Dataset& data, const Loss& loss,
                         int max_leaves, int repeats, RngSeed seed);

struct ShapleyExplanation {
  Index instance_index = -1;  // -1 when the instance is not a dataset row
  Vector phi;
  double base_value = 0.0;  // mean prediction over the background
  double prediction = 0.0;  // prediction at the instance
  int n_orderings = 0;      // 0 for exact enumeration
  Vector standard_error;    // per feature; zero for exact enumeration
  double sum_standard_error = 0.0;

  double efficiency_residual() const { return base_value + phi.sum() - prediction; }
};

inline constexpr Index kMaxExactShapleyFeatures = 15;
inline constexpr Index kDefaultBackgroundRows = 100;

// Exact Shapley values of the marginal value function
// v(S) = mean over background rows of f(x_S, z_{-S}).
ShapleyExplanation shapley_exact(const Predictor& pred, const Dataset& background,
                                 std::span<const double> instance);

// Ordering-sampling estimator: each ordering pairs a uniformly random feature
// order with one uniformly drawn background row.
ShapleyExplanation shapley_sampled(const Predictor& pred, const Dataset& background,
                                   std::span<const double> instance, int n_orderings, RngSeed seed);

// Seeded background subsample of at most `rows` rows.
Dataset background_sample(const Dataset& data, RngSeed seed, Index rows = kDefaultBackgroundRows);

// Mean |phi_j| over eval_data rows; replicates hold per-row |phi_j|.
ImportanceResult shap_importance(const Predictor& pred, const Dataset& background,
                                 const Dataset& eval_data, int n_orderings, RngSeed seed);

enum class SageMode { marginal, conditional };

struct SageOptions {
  int n_orderings = 512;
  int imputation_samples = 16;  // donor draws per coalition
  int batches = 10;             // replicate batches
  int max_leaves = 0;           // conditional samplers; 0 = default_max_leaves(n)
};

// Shapley values of nu(S) = L(nothing known) - L(S known), unknown features
// imputed from donor rows drawn marginally or within conditional-sampler
// leaves of the known features.
ImportanceResult sage(const Predictor& pred, const Dataset& data, const Loss& loss, SageMode mode,
                      const SageOptions& options, RngSeed seed);

// Monte Carlo estimate of nu(all features) with the same imputation scheme.
double sage_total_value(const Predictor& pred, const Dataset& data, const Loss& loss,
                        int imputation_samples, RngSeed seed);

struct FeatureGroup {
  std::string name;
  std::vector<Index> features;
};

// Loss increase when all columns of a group share one row permutation.
ImportanceResult grouped_pfi(const Predictor& pred, const Dataset& data, const Loss& loss,
                             const std::vector<FeatureGroup>& groups, int repeats, RngSeed seed);

}  // namespace iml
