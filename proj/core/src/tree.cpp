#include "iml/tree.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <queue>

namespace iml {
namespace {

struct Split {
  Index feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct Pending {
  std::vector<Index> rows;
  int depth = 0;
  int node = 0;
  Split split;
  std::size_t order = 0;  // creation order, breaks gain ties
};

struct PendingLess {
  bool operator()(const Pending* a, const Pending* b) const {
    if (a->split.gain != b->split.gain) return a->split.gain < b->split.gain;
    return a->order > b->order;
  }
};

class SplitFinder {
 public:
  SplitFinder(const Matrix& x, const Matrix& targets, const TreeOptions& options,
              std::vector<Index> candidates)
      : x_(x), y_(targets), options_(options), candidates_(std::move(candidates)) {}

  Split find(const std::vector<Index>& rows, int depth, Rng& rng) {
    const auto n = static_cast<Index>(rows.size());
    const Index q = y_.cols();
    if (n < 2 * std::max(1, options_.min_leaf)) return {};
    if (options_.max_depth > 0 && depth >= options_.max_depth) return {};

    totals_.assign(static_cast<std::size_t>(q), 0.0);
    double sse = 0.0;
    for (Index c = 0; c < q; ++c) {
      double s = 0.0;
      double ss = 0.0;
      for (Index r : rows) {
        const double v = y_(r, c);
        s += v;
        ss += v * v;
      }
      totals_[static_cast<std::size_t>(c)] = s;
      sse += ss - s * s / static_cast<double>(n);
    }
    if (sse <= 1e-12 * static_cast<double>(n)) return {};

    double parent_score = 0.0;
    for (double s : totals_) parent_score += s * s / static_cast<double>(n);

    const auto order = random_permutation(static_cast<Index>(candidates_.size()), rng);
    const std::size_t mtry =
        options_.features_per_split > 0
            ? std::min<std::size_t>(static_cast<std::size_t>(options_.features_per_split), candidates_.size())
            : candidates_.size();

    Split best;
    double best_score = parent_score;
    for (std::size_t k = 0; k < order.size(); ++k) {
      // Keep drawing features past mtry only while no valid split exists.
      if (k >= mtry && best.feature >= 0) break;
      const Index f = candidates_[static_cast<std::size_t>(order[k])];
      scan_feature(rows, f, best, best_score);
    }
    if (best.feature >= 0) best.gain = best_score - parent_score;
    return best;
  }

 private:
  void scan_feature(const std::vector<Index>& rows, Index f, Split& best, double& best_score) {
    const auto n = rows.size();
    const Index q = y_.cols();
    const auto min_leaf = static_cast<std::size_t>(std::max(1, options_.min_leaf));
    sorted_.resize(n);
    for (std::size_t i = 0; i < n; ++i) sorted_[i] = {x_(rows[i], f), rows[i]};
    std::sort(sorted_.begin(), sorted_.end());
    if (!(sorted_.front().first < sorted_.back().first)) return;

    left_.assign(static_cast<std::size_t>(q), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Index r = sorted_[i].second;
      for (Index c = 0; c < q; ++c) left_[static_cast<std::size_t>(c)] += y_(r, c);
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      if (!(sorted_[i].first < sorted_[i + 1].first)) continue;
      double score = 0.0;
      for (std::size_t c = 0; c < left_.size(); ++c) {
        const double sl = left_[c];
        const double sr = totals_[c] - sl;
        score += sl * sl / static_cast<double>(n_left) + sr * sr / static_cast<double>(n_right);
      }
      if (score > best_score * (1.0 + 1e-14) + 1e-300) {
        best_score = score;
        double mid = 0.5 * (sorted_[i].first + sorted_[i + 1].first);
        if (!(mid < sorted_[i + 1].first)) mid = sorted_[i].first;
        best = {f, mid, 0.0};
      }
    }
  }

  const Matrix& x_;
  const Matrix& y_;
  const TreeOptions& options_;
  std::vector<Index> candidates_;
  std::vector<double> totals_;
  std::vector<double> left_;
  std::vector<std::pair<double, Index>> sorted_;
};

}  // namespace

RegressionTree RegressionTree::fit(const Matrix& x, const Matrix& targets,
                                   std::span<const Index> rows, const TreeOptions& options,
                                   Rng& rng, std::span<const Index> candidates) {
  if (rows.empty()) throw Error("regression tree needs at least one row");
  if (targets.rows() != x.rows() || targets.cols() < 1) throw Error("tree targets do not match features");

  std::vector<Index> cand(candidates.begin(), candidates.end());
  if (cand.empty()) {
    cand.resize(static_cast<std::size_t>(x.cols()));
    std::iota(cand.begin(), cand.end(), Index{0});
  }
  SplitFinder finder(x, targets, options, cand);

  RegressionTree tree;
  auto make_node = [&](const std::vector<Index>& node_rows) {
    Node nd;
    double s = 0.0;
    for (Index r : node_rows) s += targets(r, 0);
    nd.value = s / static_cast<double>(node_rows.size());
    tree.nodes_.push_back(nd);
    return static_cast<int>(tree.nodes_.size() - 1);
  };

  std::vector<std::unique_ptr<Pending>> storage;
  std::priority_queue<Pending*, std::vector<Pending*>, PendingLess> frontier;
  std::size_t created = 0;
  auto push = [&](std::vector<Index> node_rows, int depth) {
    auto pending = std::make_unique<Pending>();
    pending->node = make_node(node_rows);
    pending->depth = depth;
    pending->split = finder.find(node_rows, depth, rng);
    pending->order = created++;
    pending->rows = std::move(node_rows);
    tree.depth_ = std::max(tree.depth_, depth);
    frontier.push(pending.get());
    storage.push_back(std::move(pending));
  };

  push(std::vector<Index>(rows.begin(), rows.end()), 0);
  int leaves = 1;
  while (!frontier.empty()) {
    Pending* cur = frontier.top();
    frontier.pop();
    const bool can_split = cur->split.feature >= 0 &&
                           (options.max_leaves <= 0 || leaves < options.max_leaves);
    if (!can_split) {
      tree.nodes_[static_cast<std::size_t>(cur->node)].leaf_id = tree.n_leaves_++;
      cur->rows.clear();
      cur->rows.shrink_to_fit();
      continue;
    }
    std::vector<Index> left;
    std::vector<Index> right;
    for (Index r : cur->rows) {
      (x(r, cur->split.feature) <= cur->split.threshold ? left : right).push_back(r);
    }
    cur->rows.clear();
    cur->rows.shrink_to_fit();
    const int node = cur->node;
    const Split split = cur->split;
    const int depth = cur->depth + 1;
    ++leaves;
    push(std::move(left), depth);
    const int left_node = static_cast<int>(tree.nodes_.size() - 1);
    push(std::move(right), depth);
    const int right_node = static_cast<int>(tree.nodes_.size() - 1);
    Node& nd = tree.nodes_[static_cast<std::size_t>(node)];
    nd.feature = split.feature;
    nd.threshold = split.threshold;
    nd.left = left_node;
    nd.right = right_node;
  }
  return tree;
}

int RegressionTree::leaf_of(const Matrix& x, Index i) const {
  return nodes_[static_cast<std::size_t>(descend(x, i))].leaf_id;
}

void RegressionTree::accumulate(const Matrix& x, Vector& out) const {
  for (Index i = 0; i < x.rows(); ++i) out(i) += predict_row(x, i);
}

std::vector<Index> RegressionTree::split_features() const {
  std::vector<Index> used;
  for (const auto& nd : nodes_) {
    if (nd.feature >= 0) used.push_back(nd.feature);
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  return used;
}

}  // namespace iml
