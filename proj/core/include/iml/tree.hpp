#pragma once

#include <span>
#include <vector>

#include "iml/core.hpp"

namespace iml {

struct TreeOptions {
  int max_depth = 0;           // 0 = unlimited
  int min_leaf = 1;            // minimum observations per leaf
  int max_leaves = 0;          // 0 = unlimited; otherwise grown best-first
  int features_per_split = 0;  // 0 = all candidate features
};

// CART regression tree with exact greedy splits at midpoints between sorted
// distinct values. Targets may have several columns, in which case the split
// criterion is the summed per-column SSE reduction.
class RegressionTree {
 public:
  // `candidates` restricts which feature columns may be split on (empty = all).
  static RegressionTree fit(const Matrix& x, const Matrix& targets, std::span<const Index> rows,
                            const TreeOptions& options, Rng& rng,
                            std::span<const Index> candidates = {});

  int n_leaves() const { return n_leaves_; }
  int depth() const { return depth_; }

  // Leaf id in [0, n_leaves) for row `i` of `x`.
  int leaf_of(const Matrix& x, Index i) const;
  // Mean of the first target column in the leaf reached by row `i`.
  double predict_row(const Matrix& x, Index i) const {
    return nodes_[static_cast<std::size_t>(descend(x, i))].value;
  }
  // Adds predictions for every row of x into `out`.
  void accumulate(const Matrix& x, Vector& out) const;

  // Feature indices used by at least one split.
  std::vector<Index> split_features() const;

 private:
  struct Node {
    Index feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_id = -1;
    double value = 0.0;
  };

  int descend(const Matrix& x, Index i) const {
    int k = 0;
    while (nodes_[static_cast<std::size_t>(k)].feature >= 0) {
      const Node& nd = nodes_[static_cast<std::size_t>(k)];
      k = x(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return k;
  }

  std::vector<Node> nodes_;
  int n_leaves_ = 0;
  int depth_ = 0;
};

}  // namespace iml
