#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "iml/core.hpp"

namespace iml {

enum class LearnerKind { ols_linear, knn, kernel_ridge_rbf, random_forest };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::ols_linear;

  // knn
  int k = 5;
  // kernel_ridge_rbf: solves (K + lambda I) alpha = y - mean(y).
  double ridge_lambda = 1.0;
  // RBF width exp(-gamma |x - x'|^2); unset = median heuristic.
  std::optional<double> gamma;
  // random_forest
  int n_trees = 100;
  int max_depth = 0;           // 0 = unlimited
  int features_per_split = 0;  // 0 = max(1, p / 3)
  bool bootstrap = true;
  int min_leaf = 1;

  // Keys are the suffixes after `learner.params.` (k, lambda, gamma, trees,
  // max_depth, mtry, bootstrap, min_leaf). Unknown or inapplicable keys throw.
  static LearnerSpec from_params(std::string_view kind,
                                 const std::map<std::string, std::string>& params);
  std::map<std::string, std::string> to_params() const;

  void validate() const;
};

// Convenience constructors for the configurations used across the toolkit.
LearnerSpec ols_spec();
LearnerSpec knn_spec(int k);
LearnerSpec kernel_ridge_spec(double ridge_lambda, std::optional<double> gamma = {});
LearnerSpec forest_spec(int n_trees, int max_depth = 0, int features_per_split = 0);

class FittedModel {
 public:
  class State {
   public:
    virtual ~State() = default;
    virtual Vector predict(const Matrix& x) const = 0;
  };

  FittedModel(LearnerSpec spec, std::shared_ptr<const State> state, Index p);

  const LearnerSpec& spec() const { return spec_; }
  Vector predict(const Matrix& x) const;
  Predictor predictor() const;

  // OLS fits only: slope per feature followed by the intercept.
  std::optional<Vector> linear_coefficients() const;
  std::optional<double> linear_intercept() const;
  // Kernel bandwidth actually used (kernel ridge fits only).
  std::optional<double> kernel_gamma() const;

 private:
  LearnerSpec spec_;
  std::shared_ptr<const State> state_;
  Index p_;
};

FittedModel fit(const LearnerSpec& spec, const Dataset& data, RngSeed seed);

// Median of pairwise Euclidean distances between rows (subsampled to at most
// `max_rows` rows, deterministically by stride).
double median_pairwise_distance(const Matrix& x, Index max_rows = 1000);

// Noise-free structural mean of a registered data-generating process.
Predictor oracle_predictor(std::string_view dgp_id, int p = 0);

}  // namespace iml
