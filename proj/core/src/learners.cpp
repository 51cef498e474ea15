#include "iml/learners.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "iml/dgp.hpp"
#include "iml/parallel.hpp"
#include "iml/tree.hpp"

namespace iml {
namespace {

class LinearState final : public FittedModel::State {
 public:
  LinearState(Vector coef, double intercept) : coef_(std::move(coef)), intercept_(intercept) {}
  Vector predict(const Matrix& x) const override { return (x * coef_).array() + intercept_; }
  const Vector& coef() const { return coef_; }
  double intercept() const { return intercept_; }

 private:
  Vector coef_;
  double intercept_;
};

class KnnState final : public FittedModel::State {
 public:
  KnnState(Matrix x, Vector y, int k) : x_(std::move(x)), y_(std::move(y)), k_(k) {}
  Vector predict(const Matrix& x) const override {
    Vector out(x.rows());
    std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(x_.rows()));
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index t = 0; t < x_.rows(); ++t) {
        dist[static_cast<std::size_t>(t)] = {(x_.row(t) - x.row(i)).squaredNorm(), t};
      }
      std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
      double s = 0.0;
      for (int m = 0; m < k_; ++m) s += y_(dist[static_cast<std::size_t>(m)].second);
      out(i) = s / k_;
    }
    return out;
  }

 private:
  Matrix x_;
  Vector y_;
  int k_;
};

class KernelRidgeState final : public FittedModel::State {
 public:
  KernelRidgeState(Matrix x, Vector alpha, double intercept, double gamma)
      : x_(std::move(x)), alpha_(std::move(alpha)), intercept_(intercept), gamma_(gamma),
        sq_norms_(x_.rowwise().squaredNorm()) {}

  Vector predict(const Matrix& x) const override {
    const Vector q = x.rowwise().squaredNorm();
    Matrix cross = x * x_.transpose();  // m x n
    for (Index c = 0; c < cross.cols(); ++c) {
      for (Index r = 0; r < cross.rows(); ++r) {
        const double d2 = std::max(0.0, q(r) + sq_norms_(c) - 2.0 * cross(r, c));
        cross(r, c) = std::exp(-gamma_ * d2);
      }
    }
    return (cross * alpha_).array() + intercept_;
  }
  double gamma() const { return gamma_; }

 private:
  Matrix x_;
  Vector alpha_;
  double intercept_;
  double gamma_;
  Vector sq_norms_;
};

class ForestState final : public FittedModel::State {
 public:
  explicit ForestState(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}
  Vector predict(const Matrix& x) const override {
    Vector out = Vector::Zero(x.rows());
    for (const auto& tree : trees_) tree.accumulate(x, out);
    return out / static_cast<double>(trees_.size());
  }

 private:
  std::vector<RegressionTree> trees_;
};

std::shared_ptr<const FittedModel::State> fit_ols(const Dataset& data) {
  const Index n = data.n();
  const Index p = data.p();
  Matrix design(n, p + 1);
  design.leftCols(p) = data.features();
  design.col(p).setOnes();
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  Vector beta;
  if (qr.rank() < p + 1) {
    warn("ols: singular design matrix, applying ridge jitter 1e-8");
    Matrix gram = design.transpose() * design;
    gram.diagonal().array() += 1e-8;
    beta = gram.ldlt().solve(design.transpose() * data.target());
  } else {
    beta = qr.solve(data.target());
  }
  return std::make_shared<LinearState>(beta.head(p), beta(p));
}

std::shared_ptr<const FittedModel::State> fit_kernel_ridge(const LearnerSpec& spec,
                                                           const Dataset& data) {
  const Matrix& x = data.features();
  double gamma = 0.0;
  if (spec.gamma) {
    gamma = *spec.gamma;
  } else {
    const double med = median_pairwise_distance(x);
    if (!(med > 0.0)) throw Error("kernel ridge: median pairwise distance is zero");
    gamma = 1.0 / (2.0 * med * med);
  }
  const Index n = data.n();
  const Vector sq = x.rowwise().squaredNorm();
  Matrix k = x * x.transpose();
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) {
      k(r, c) = std::exp(-gamma * std::max(0.0, sq(r) + sq(c) - 2.0 * k(r, c)));
    }
  }
  k.diagonal().array() += spec.ridge_lambda;
  const double intercept = data.target().mean();
  const Vector centered = data.target().array() - intercept;
  Vector alpha = k.llt().solve(centered);
  return std::make_shared<KernelRidgeState>(x, std::move(alpha), intercept, gamma);
}

std::shared_ptr<const FittedModel::State> fit_forest(const LearnerSpec& spec, const Dataset& data,
                                                     RngSeed seed) {
  TreeOptions options;
  options.max_depth = spec.max_depth;
  options.min_leaf = spec.min_leaf;
  options.features_per_split =
      spec.features_per_split > 0 ? spec.features_per_split
                                  : static_cast<int>(std::max<Index>(1, data.p() / 3));
  const Matrix targets = data.target();
  std::vector<RegressionTree> trees(static_cast<std::size_t>(spec.n_trees));
  parallel_for(trees.size(), [&](std::size_t t) {
    auto rng = make_rng(derive_seed(seed, t));
    std::vector<Index> rows(static_cast<std::size_t>(data.n()));
    if (spec.bootstrap) {
      for (auto& r : rows) r = static_cast<Index>(rng() % static_cast<std::uint64_t>(data.n()));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    trees[t] = RegressionTree::fit(data.features(), targets, rows, options, rng);
  });
  return std::make_shared<ForestState>(std::move(trees));
}

int parse_int(const std::string& key, const std::string& text) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("learner.params." + key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("learner.params." + key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::ols_linear: return "ols_linear";
    case LearnerKind::knn: return "knn";
    case LearnerKind::kernel_ridge_rbf: return "kernel_ridge_rbf";
    case LearnerKind::random_forest: return "random_forest";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "ols_linear") return LearnerKind::ols_linear;
  if (name == "knn") return LearnerKind::knn;
  if (name == "kernel_ridge_rbf") return LearnerKind::kernel_ridge_rbf;
  if (name == "random_forest") return LearnerKind::random_forest;
  throw Error("learner.kind: unknown learner '" + std::string(name) + "'");
}

LearnerSpec LearnerSpec::from_params(std::string_view kind,
                                     const std::map<std::string, std::string>& params) {
  LearnerSpec spec;
  spec.kind = parse_learner_kind(kind);
  for (const auto& [key, value] : params) {
    const bool knn = spec.kind == LearnerKind::knn;
    const bool krr = spec.kind == LearnerKind::kernel_ridge_rbf;
    const bool rf = spec.kind == LearnerKind::random_forest;
    if (key == "k" && knn) {
      spec.k = parse_int(key, value);
    } else if (key == "lambda" && krr) {
      spec.ridge_lambda = parse_real(key, value);
    } else if (key == "gamma" && krr) {
      if (value != "median") spec.gamma = parse_real(key, value);
    } else if (key == "trees" && rf) {
      spec.n_trees = parse_int(key, value);
    } else if (key == "max_depth" && rf) {
      spec.max_depth = parse_int(key, value);
    } else if (key == "mtry" && rf) {
      spec.features_per_split = parse_int(key, value);
    } else if (key == "min_leaf" && rf) {
      spec.min_leaf = parse_int(key, value);
    } else if (key == "bootstrap" && rf) {
      if (value != "true" && value != "false") {
        throw Error("learner.params.bootstrap: expected true or false, got '" + value + "'");
      }
      spec.bootstrap = value == "true";
    } else {
      throw Error("learner.params." + key + ": not a parameter of " + std::string(kind));
    }
  }
  spec.validate();
  return spec;
}

std::map<std::string, std::string> LearnerSpec::to_params() const {
  switch (kind) {
    case LearnerKind::ols_linear: return {};
    case LearnerKind::knn: return {{"k", std::to_string(k)}};
    case LearnerKind::kernel_ridge_rbf:
      return {{"lambda", format_real(ridge_lambda)},
              {"gamma", gamma ? format_real(*gamma) : std::string("median")}};
    case LearnerKind::random_forest:
      return {{"trees", std::to_string(n_trees)},
              {"max_depth", std::to_string(max_depth)},
              {"mtry", std::to_string(features_per_split)},
              {"min_leaf", std::to_string(min_leaf)},
              {"bootstrap", bootstrap ? "true" : "false"}};
  }
  return {};
}

void LearnerSpec::validate() const {
  if (k < 1) throw Error("learner.params.k must be positive");
  if (!(ridge_lambda > 0.0)) throw Error("learner.params.lambda must be positive");
  if (gamma && !(*gamma > 0.0)) throw Error("learner.params.gamma must be positive");
  if (n_trees < 1) throw Error("learner.params.trees must be at least 1");
  if (max_depth < 0) throw Error("learner.params.max_depth must be nonnegative");
  if (features_per_split < 0) throw Error("learner.params.mtry must be nonnegative");
  if (min_leaf < 1) throw Error("learner.params.min_leaf must be positive");
}

LearnerSpec ols_spec() { return LearnerSpec{}; }

LearnerSpec knn_spec(int k) {
  LearnerSpec s;
  s.kind = LearnerKind::knn;
  s.k = k;
  return s;
}

LearnerSpec kernel_ridge_spec(double ridge_lambda, std::optional<double> gamma) {
  LearnerSpec s;
  s.kind = LearnerKind::kernel_ridge_rbf;
  s.ridge_lambda = ridge_lambda;
  s.gamma = gamma;
  return s;
}

LearnerSpec forest_spec(int n_trees, int max_depth, int features_per_split) {
  LearnerSpec s;
  s.kind = LearnerKind::random_forest;
  s.n_trees = n_trees;
  s.max_depth = max_depth;
  s.features_per_split = features_per_split;
  return s;
}

FittedModel::FittedModel(LearnerSpec spec, std::shared_ptr<const State> state, Index p)
    : spec_(std::move(spec)), state_(std::move(state)), p_(p) {}

Vector FittedModel::predict(const Matrix& x) const {
  if (x.cols() != p_) {
    throw Error("model expects " + std::to_string(p_) + " features, got " + std::to_string(x.cols()));
  }
  return state_->predict(x);
}

Predictor FittedModel::predictor() const {
  return Predictor([self = *this](const Matrix& x) { return self.predict(x); });
}

std::optional<Vector> FittedModel::linear_coefficients() const {
  if (const auto* lin = dynamic_cast<const LinearState*>(state_.get())) return lin->coef();
  return std::nullopt;
}

std::optional<double> FittedModel::linear_intercept() const {
  if (const auto* lin = dynamic_cast<const LinearState*>(state_.get())) return lin->intercept();
  return std::nullopt;
}

std::optional<double> FittedModel::kernel_gamma() const {
  if (const auto* krr = dynamic_cast<const KernelRidgeState*>(state_.get())) return krr->gamma();
  return std::nullopt;
}

FittedModel fit(const LearnerSpec& spec, const Dataset& data, RngSeed seed) {
  spec.validate();
  switch (spec.kind) {
    case LearnerKind::ols_linear:
      return FittedModel(spec, fit_ols(data), data.p());
    case LearnerKind::knn:
      if (data.n() < spec.k) {
        throw Error("knn: need at least k=" + std::to_string(spec.k) + " observations, got " +
                    std::to_string(data.n()));
      }
      return FittedModel(spec, std::make_shared<KnnState>(data.features(), data.target(), spec.k),
                         data.p());
    case LearnerKind::kernel_ridge_rbf:
      return FittedModel(spec, fit_kernel_ridge(spec, data), data.p());
    case LearnerKind::random_forest:
      return FittedModel(spec, fit_forest(spec, data, seed), data.p());
  }
  throw Error("unhandled learner kind");
}

double median_pairwise_distance(const Matrix& x, Index max_rows) {
  const Index stride = std::max<Index>(1, (x.rows() + max_rows - 1) / max_rows);
  std::vector<Index> rows;
  for (Index i = 0; i < x.rows(); i += stride) rows.push_back(i);
  std::vector<double> d;
  d.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      d.push_back((x.row(rows[a]) - x.row(rows[b])).norm());
    }
  }
  if (d.empty()) return 0.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(d.begin(), mid);
  return 0.5 * (lower + upper);
}

Predictor oracle_predictor(std::string_view dgp_id, int p) {
  auto spec = find_dgp(dgp_id, p);
  return Predictor([spec = std::move(spec)](const Matrix& x) { return truth_mean(spec, x); });
}

}  // namespace iml
