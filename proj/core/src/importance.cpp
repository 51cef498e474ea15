#include "iml/importance.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>

#include "csv_util.hpp"
#include "iml/parallel.hpp"

namespace iml {
namespace {

constexpr std::array<double, 2> kBandProbs{0.05, 0.95};

// Replaces `columns` of every leaf's rows by the same columns of a random
// within-leaf reordering. One leaf holding 0..n-1 is a plain row permutation.
void permute_within_leaves(const Matrix& source, Matrix& target, std::span<const Index> columns,
                           const std::vector<std::vector<Index>>& leaves, Rng& rng) {
  for (const auto& leaf : leaves) {
    const auto perm = random_permutation(static_cast<Index>(leaf.size()), rng);
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const Index dst = leaf[i];
      const Index src = leaf[static_cast<std::size_t>(perm[i])];
      for (Index c : columns) target(dst, c) = source(src, c);
    }
  }
}

// Leaf count for the conditional sampler: 5-fold cross-validated SSE over a
// geometric ladder of best-first sizes, smallest size within one standard
// error of the minimum.
int cv_leaf_count(const Matrix& x, const Matrix& targets, std::span<const Index> candidates,
                  const TreeOptions& base, int max_leaves, RngSeed seed) {
  constexpr int kFolds = 5;
  const Index n = x.rows();
  std::vector<int> sizes;
  for (double k = 1.0; k < max_leaves; k = std::max(k + 1.0, std::floor(k * 1.5))) {
    sizes.push_back(static_cast<int>(k));
  }
  sizes.push_back(max_leaves);

  auto rng = make_rng(seed);
  const auto perm = random_permutation(n, rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>(i % kFolds);

  // err(s, i): held-out squared error of row i under size sizes[s].
  Matrix err(static_cast<Index>(sizes.size()), n);
  for (int f = 0; f < kFolds; ++f) {
    std::vector<Index> train;
    std::vector<Index> held;
    for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
    if (train.size() < 2 * static_cast<std::size_t>(base.min_leaf)) return 1;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      TreeOptions options = base;
      options.max_leaves = sizes[s];
      auto fit_rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(f), s));
      const RegressionTree tree = RegressionTree::fit(x, targets, train, options, fit_rng, candidates);
      Matrix sums = Matrix::Zero(tree.n_leaves(), targets.cols());
      Vector counts = Vector::Zero(tree.n_leaves());
      for (Index i : train) {
        const int leaf = tree.leaf_of(x, i);
        sums.row(leaf) += targets.row(i);
        counts(leaf) += 1.0;
      }
      for (Index i : held) {
        const int leaf = tree.leaf_of(x, i);
        err(static_cast<Index>(s), i) = (targets.row(i) - sums.row(leaf) / counts(leaf)).squaredNorm();
      }
    }
  }
  const Vector cv = err.rowwise().mean();
  Index best = 0;
  cv.minCoeff(&best);
  const double se = std::sqrt((err.row(best).array() - cv(best)).square().sum() /
                              static_cast<double>(n - 1) / static_cast<double>(n));
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (cv(static_cast<Index>(s)) <= cv(best) + se) return sizes[s];
  }
  return sizes[static_cast<std::size_t>(best)];
}

std::vector<std::vector<Index>> single_leaf(Index n) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  return {std::move(all)};
}

// One permutation-importance unit: `columns` permuted jointly within `leaves`,
// replicate r seeded by derive_seed(seed, stream, r).
std::vector<double> permutation_replicates(const Predictor& pred, const Dataset& data,
                                           const Loss& loss, double baseline,
                                           std::span<const Index> columns,
                                           const std::vector<std::vector<Index>>& leaves,
                                           int repeats, RngSeed seed, std::uint64_t stream) {
  std::vector<double> out(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    auto rng = make_rng(derive_seed(seed, stream, static_cast<std::uint64_t>(r)));
    Matrix x = data.features();
    permute_within_leaves(data.features(), x, columns, leaves, rng);
    out[static_cast<std::size_t>(r)] = loss(data.target(), pred.predict(x)) - baseline;
  }
  return out;
}

void check_repeats(const Dataset& data, int repeats) {
  if (repeats < 1) throw Error("repeats must be at least 1");
  if (data.n() < 2) throw Error("permutation importance needs at least two observations");
}

}  // namespace

ImportanceResult ImportanceResult::from_replicates(ImportanceUnit unit,
                                                   std::vector<std::string> names,
                                                   std::vector<std::vector<double>> replicates) {
  if (names.size() != replicates.size()) throw Error("importance names and replicates differ in size");
  ImportanceResult r;
  r.unit = unit;
  r.names = std::move(names);
  r.replicates = std::move(replicates);
  for (const auto& rep : r.replicates) {
    r.scores.push_back(mean(rep));
    const auto band = quantiles(rep, kBandProbs);
    r.q05.push_back(band[0]);
    r.q95.push_back(band[1]);
  }
  return r;
}

void write_importance_csv(const ImportanceResult& result, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "name,score,q05,q95" << (result.p_values ? ",p_value" : "") << '\n';
  for (std::size_t u = 0; u < result.size(); ++u) {
    out << result.names[u] << ',' << detail::fmt(result.scores[u]) << ',' << detail::fmt(result.q05[u])
        << ',' << detail::fmt(result.q95[u]);
    if (result.p_values) out << ',' << detail::fmt((*result.p_values)[u]);
    out << '\n';
  }
}

ImportanceResult pfi(const Predictor& pred, const Dataset& data, const Loss& loss, int repeats,
                     RngSeed seed) {
  check_repeats(data, repeats);
  const double baseline = evaluate(pred, data, loss);
  const auto leaves = single_leaf(data.n());
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(data.p()));
  parallel_for(reps.size(), [&](std::size_t j) {
    const Index col = static_cast<Index>(j);
    reps[j] = permutation_replicates(pred, data, loss, baseline, std::span(&col, 1), leaves, repeats,
                                     seed, j);
  });
  return ImportanceResult::from_replicates(ImportanceUnit::feature, data.feature_names(), std::move(reps));
}

// ---------------------------------------------------------------------------

ConditionalSampler ConditionalSampler::single_leaf(std::vector<Index> features, Index p) {
  ConditionalSampler s;
  s.features_ = std::move(features);
  s.p_ = p;
  return s;
}

std::vector<int> ConditionalSampler::leaf_of_rows(const Matrix& x) const {
  if (x.cols() != p_) throw Error("conditional sampler: feature count mismatch");
  std::vector<int> out(static_cast<std::size_t>(x.rows()), 0);
  if (tree_) {
    for (Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = tree_->leaf_of(x, i);
  }
  return out;
}

std::vector<std::vector<Index>> ConditionalSampler::leaves(const Matrix& x) const {
  const auto ids = leaf_of_rows(x);
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(n_leaves()));
  for (std::size_t i = 0; i < ids.size(); ++i) groups[static_cast<std::size_t>(ids[i])].push_back(static_cast<Index>(i));
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  return groups;
}

int default_max_leaves(Index n) { return static_cast<int>(std::max<Index>(1, n / kConditionalMinLeaf)); }

ConditionalSampler fit_conditional_sampler(const Dataset& data, Index feature_index, int max_leaves,
                                           RngSeed seed) {
  return fit_conditional_sampler(data, std::vector<Index>{feature_index}, max_leaves, seed);
}

ConditionalSampler fit_conditional_sampler(const Dataset& data, std::vector<Index> features,
                                           int max_leaves, RngSeed seed) {
  if (max_leaves < 1) throw Error("max_leaves must be at least 1");
  if (features.empty()) throw Error("conditional sampler needs at least one feature");
  std::sort(features.begin(), features.end());
  if (std::adjacent_find(features.begin(), features.end()) != features.end()) {
    throw Error("conditional sampler features repeat");
  }
  for (Index j : features) {
    if (j < 0 || j >= data.p()) throw Error("feature index out of range");
  }
  ConditionalSampler sampler = ConditionalSampler::single_leaf(features, data.p());

  std::vector<Index> rest;
  for (Index j = 0; j < data.p(); ++j) {
    if (!std::binary_search(features.begin(), features.end(), j)) rest.push_back(j);
  }
  if (rest.empty() || max_leaves == 1) return sampler;
  if (data.n() < 2 * kConditionalMinLeaf) {
    warn("conditional sampler: n=" + std::to_string(data.n()) +
         " is too small for leaves of 20; falling back to marginal permutation");
    return sampler;
  }

  // Standardized targets so every sampled feature counts equally.
  Matrix targets(data.n(), static_cast<Index>(features.size()));
  for (std::size_t c = 0; c < features.size(); ++c) {
    const auto col = data.features().col(features[c]);
    const double m = col.mean();
    const double sd = std::sqrt((col.array() - m).square().mean());
    targets.col(static_cast<Index>(c)) = sd > 0.0 ? Vector((col.array() - m) / sd) : Vector(col.array() - m);
  }
  TreeOptions options;
  options.min_leaf = kConditionalMinLeaf;
  options.max_leaves = cv_leaf_count(data.features(), targets, rest, options, max_leaves, derive_seed(seed, 1));
  if (options.max_leaves == 1) return sampler;
  std::vector<Index> rows(static_cast<std::size_t>(data.n()));
  std::iota(rows.begin(), rows.end(), Index{0});
  auto rng = make_rng(seed);
  sampler.tree_ = std::make_shared<const RegressionTree>(
      RegressionTree::fit(data.features(), targets, rows, options, rng, rest));
  return sampler;
}

ImportanceResult cfi(const Predictor& pred, const Dataset& data, const Loss& loss,
                     const ConditionalSampler& sampler, int repeats, RngSeed seed) {
  check_repeats(data, repeats);
  const double baseline = evaluate(pred, data, loss);
  const auto leaves = sampler.leaves(data.features());
  const auto& cols = sampler.features();
  std::string name;
  for (Index j : cols) name += (name.empty() ? "" : "+") + data.feature_name(j);
  auto reps = permutation_replicates(pred, data, loss, baseline, cols, leaves, repeats, seed,
                                     static_cast<std::uint64_t>(cols.front()));
  return ImportanceResult::from_replicates(ImportanceUnit::feature, {name}, {std::move(reps)});
}

ImportanceResult cfi_all(const Predictor& pred, const Dataset& data, const Loss& loss,
                         int max_leaves, int repeats, RngSeed seed) {
  check_repeats(data, repeats);
  const double baseline = evaluate(pred, data, loss);
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(data.p()));
  parallel_for(reps.size(), [&](std::size_t j) {
    const auto col = static_cast<Index>(j);
    const auto sampler = fit_conditional_sampler(data, col, max_leaves, derive_seed(seed, 0x5a3f, j));
    reps[j] = permutation_replicates(pred, data, loss, baseline, std::span(&col, 1),
                                     sampler.leaves(data.features()), repeats, seed, j);
  });
  return ImportanceResult::from_replicates(ImportanceUnit::feature, data.feature_names(), std::move(reps));
}

// ---------------------------------------------------------------------------

namespace {

Vector instance_vector(const Dataset& background, std::span<const double> instance) {
  if (static_cast<Index>(instance.size()) != background.p()) {
    throw Error("instance length does not match the background feature count");
  }
  return Eigen::Map<const Vector>(instance.data(), static_cast<Index>(instance.size()));
}

}  // namespace

ShapleyExplanation shapley_exact(const Predictor& pred, const Dataset& background,
                                 std::span<const double> instance) {
  const Index p = background.p();
  if (p > kMaxExactShapleyFeatures) {
    throw Error("exact Shapley enumeration supports at most 15 features; use shapley_sampled");
  }
  const Vector x = instance_vector(background, instance);
  const std::size_t n_masks = std::size_t{1} << p;
  std::vector<double> value(n_masks);
  parallel_for(n_masks, [&](std::size_t mask) {
    Matrix z = background.features();
    for (Index j = 0; j < p; ++j) {
      if (mask & (std::size_t{1} << j)) z.col(j).setConstant(x(j));
    }
    value[mask] = pred.predict(z).mean();
  });

  // weight[s] = s! (p - s - 1)! / p!
  std::vector<double> weight(static_cast<std::size_t>(p));
  for (Index s = 0; s < p; ++s) {
    double w = 1.0 / static_cast<double>(p);
    // 1 / (p * C(p-1, s))
    for (Index k = 1; k <= s; ++k) w *= static_cast<double>(k) / static_cast<double>(p - k);
    weight[static_cast<std::size_t>(s)] = w;
  }

  ShapleyExplanation out;
  out.phi = Vector::Zero(p);
  out.standard_error = Vector::Zero(p);
  for (Index j = 0; j < p; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      phi += weight[s] * (value[mask | bit] - value[mask]);
    }
    out.phi(j) = phi;
  }
  out.base_value = value.front();
  out.prediction = pred.predict(x.transpose())(0);
  return out;
}

ShapleyExplanation shapley_sampled(const Predictor& pred, const Dataset& background,
                                   std::span<const double> instance, int n_orderings, RngSeed seed) {
  if (n_orderings < 1) throw Error("n_orderings must be at least 1");
  const Index p = background.p();
  const Vector x = instance_vector(background, instance);
  constexpr int kChunk = 64;
  const auto m = static_cast<std::size_t>(n_orderings);
  const std::size_t n_chunks = (m + kChunk - 1) / kChunk;
  Matrix contrib(static_cast<Index>(m), p);  // per ordering
  Vector start(static_cast<Index>(m));       // f(z) per ordering

  parallel_for(n_chunks, [&](std::size_t chunk) {
    const std::size_t first = chunk * kChunk;
    const std::size_t last = std::min(m, first + kChunk);
    const auto count = static_cast<Index>(last - first);
    Matrix rows(count * (p + 1), p);
    std::vector<std::vector<Index>> orders(last - first);
    for (std::size_t k = first; k < last; ++k) {
      auto rng = make_rng(derive_seed(seed, k));
      orders[k - first] = random_permutation(p, rng);
      const auto z = static_cast<Index>(rng() % static_cast<std::uint64_t>(background.n()));
      const Index base = static_cast<Index>(k - first) * (p + 1);
      rows.row(base) = background.features().row(z);
      for (Index t = 0; t < p; ++t) {
        rows.row(base + t + 1) = rows.row(base + t);
        const Index j = orders[k - first][static_cast<std::size_t>(t)];
        rows(base + t + 1, j) = x(j);
      }
    }
    const Vector f = pred.predict(rows);
    for (std::size_t k = first; k < last; ++k) {
      const Index base = static_cast<Index>(k - first) * (p + 1);
      start(static_cast<Index>(k)) = f(base);
      for (Index t = 0; t < p; ++t) {
        const Index j = orders[k - first][static_cast<std::size_t>(t)];
        contrib(static_cast<Index>(k), j) = f(base + t + 1) - f(base + t);
      }
    }
  });

  ShapleyExplanation out;
  out.n_orderings = n_orderings;
  out.phi = contrib.colwise().mean().transpose();
  out.standard_error = Vector::Zero(p);
  const double mf = static_cast<double>(m);
  if (m > 1) {
    for (Index j = 0; j < p; ++j) {
      const double var = (contrib.col(j).array() - out.phi(j)).square().sum() / (mf - 1.0);
      out.standard_error(j) = std::sqrt(var / mf);
    }
    const Vector sums = contrib.rowwise().sum();
    const double ms = sums.mean();
    out.sum_standard_error = std::sqrt((sums.array() - ms).square().sum() / (mf - 1.0) / mf);
  }
  out.base_value = pred.predict(background.features()).mean();
  out.prediction = pred.predict(x.transpose())(0);
  return out;
}

Dataset background_sample(const Dataset& data, RngSeed seed, Index rows) {
  if (rows < 1) throw Error("background needs at least one row");
  if (data.n() <= rows) return data;
  auto rng = make_rng(seed);
  auto perm = random_permutation(data.n(), rng);
  perm.resize(static_cast<std::size_t>(rows));
  std::sort(perm.begin(), perm.end());
  return data.rows(perm);
}

ImportanceResult shap_importance(const Predictor& pred, const Dataset& background,
                                 const Dataset& eval_data, int n_orderings, RngSeed seed) {
  if (eval_data.p() != background.p()) throw Error("eval data and background feature counts differ");
  const Index p = background.p();
  const auto n_eval = static_cast<std::size_t>(eval_data.n());
  Matrix abs_phi(static_cast<Index>(n_eval), p);
  parallel_for(n_eval, [&](std::size_t i) {
    std::vector<double> row(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) row[static_cast<std::size_t>(j)] = eval_data.features()(static_cast<Index>(i), j);
    const auto expl = shapley_sampled(pred, background, row, n_orderings, derive_seed(seed, i));
    abs_phi.row(static_cast<Index>(i)) = expl.phi.cwiseAbs().transpose();
  });
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) reps[static_cast<std::size_t>(j)] = column_values(abs_phi, j);
  return ImportanceResult::from_replicates(ImportanceUnit::feature, eval_data.feature_names(), std::move(reps));
}

// ---------------------------------------------------------------------------

namespace {

// Within-leaf donor pools for every coalition of known features (bit mask).
class CoalitionSamplers {
 public:
  CoalitionSamplers(const Dataset& data, int max_leaves, RngSeed seed) {
    const Index p = data.p();
    const std::size_t n_masks = std::size_t{1} << p;
    leaf_of_row_.resize(n_masks);
    pools_.resize(n_masks);
    parallel_for(n_masks - 1, [&](std::size_t known) {
      std::vector<Index> unknown;
      for (Index j = 0; j < p; ++j) {
        if (!(known & (std::size_t{1} << j))) unknown.push_back(j);
      }
      const auto sampler = fit_conditional_sampler(data, unknown, max_leaves, derive_seed(seed, known));
      auto& leaf_ids = leaf_of_row_[known];
      const auto ids = sampler.leaf_of_rows(data.features());
      leaf_ids.assign(ids.begin(), ids.end());
      pools_[known].resize(static_cast<std::size_t>(sampler.n_leaves()));
      for (std::size_t i = 0; i < ids.size(); ++i) {
        pools_[known][static_cast<std::size_t>(ids[i])].push_back(static_cast<Index>(i));
      }
    });
  }

  // Rows sharing row i's leaf under the sampler for coalition `known`.
  const std::vector<Index>& pool(std::size_t known, Index row) const {
    return pools_[known][static_cast<std::size_t>(leaf_of_row_[known][static_cast<std::size_t>(row)])];
  }

 private:
  std::vector<std::vector<int>> leaf_of_row_;
  std::vector<std::vector<std::vector<Index>>> pools_;
};

inline constexpr Index kMaxConditionalSageFeatures = 12;

}  // namespace

ImportanceResult sage(const Predictor& pred, const Dataset& data, const Loss& loss, SageMode mode,
                      const SageOptions& options, RngSeed seed) {
  if (options.n_orderings < 1) throw Error("n_orderings must be at least 1");
  if (options.imputation_samples < 1) throw Error("imputation_samples must be at least 1");
  if (options.batches < 1) throw Error("batches must be at least 1");
  const Index p = data.p();
  const Index n = data.n();
  std::unique_ptr<CoalitionSamplers> samplers;
  if (mode == SageMode::conditional) {
    if (p > kMaxConditionalSageFeatures) {
      throw Error("conditional SAGE supports at most 12 features");
    }
    const int leaves = options.max_leaves > 0 ? options.max_leaves : default_max_leaves(n);
    samplers = std::make_unique<CoalitionSamplers>(data, leaves, derive_seed(seed, 0xc0de));
  }

  const auto m = static_cast<std::size_t>(options.n_orderings);
  const Index k_imp = options.imputation_samples;
  Matrix contrib(static_cast<Index>(m), p);
  parallel_for(m, [&](std::size_t k) {
    auto rng = make_rng(derive_seed(seed, k));
    const auto i = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    const auto order = random_permutation(p, rng);
    const double y = data.target()(i);
    const auto x = data.features().row(i);
    auto draw = [&](const std::vector<Index>& pool) {
      return pool[static_cast<std::size_t>(rng() % pool.size())];
    };

    Matrix block(k_imp, p);
    std::size_t known = 0;
    auto loss_of_block = [&] {
      const Vector f = pred.predict(block);
      return loss.pointwise(y, f.mean());
    };
    std::vector<Index> all_rows;
    if (!samplers) {
      // Marginal: one set of donors shared along the ordering.
      for (Index d = 0; d < k_imp; ++d) {
        block.row(d) = data.features().row(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
      }
    } else {
      all_rows.resize(static_cast<std::size_t>(n));
      std::iota(all_rows.begin(), all_rows.end(), Index{0});
      for (Index d = 0; d < k_imp; ++d) block.row(d) = data.features().row(draw(all_rows));
    }
    double prev = loss_of_block();
    for (Index t = 0; t < p; ++t) {
      const Index j = order[static_cast<std::size_t>(t)];
      known |= std::size_t{1} << j;
      double cur = 0.0;
      if (!samplers) {
        block.col(j).setConstant(x(j));
        cur = loss_of_block();
      } else if (t + 1 == p) {
        cur = loss.pointwise(y, pred.predict(x)(0));
      } else {
        const auto& pool = samplers->pool(known, i);
        for (Index d = 0; d < k_imp; ++d) {
          block.row(d) = data.features().row(draw(pool));
          for (Index c = 0; c < p; ++c) {
            if (known & (std::size_t{1} << c)) block(d, c) = x(c);
          }
        }
        cur = loss_of_block();
      }
      contrib(static_cast<Index>(k), j) = prev - cur;
      prev = cur;
    }
  });

  const std::size_t n_batches = std::min<std::size_t>(static_cast<std::size_t>(options.batches), m);
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(p), std::vector<double>(n_batches, 0.0));
  std::vector<double> batch_size(n_batches, 0.0);
  for (std::size_t k = 0; k < m; ++k) batch_size[k % n_batches] += 1.0;
  for (Index j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      reps[static_cast<std::size_t>(j)][k % n_batches] += contrib(static_cast<Index>(k), j);
    }
    for (std::size_t b = 0; b < n_batches; ++b) reps[static_cast<std::size_t>(j)][b] /= batch_size[b];
  }
  return ImportanceResult::from_replicates(ImportanceUnit::feature, data.feature_names(), std::move(reps));
}

double sage_total_value(const Predictor& pred, const Dataset& data, const Loss& loss,
                        int imputation_samples, RngSeed seed) {
  if (imputation_samples < 1) throw Error("imputation_samples must be at least 1");
  const Index n = data.n();
  const Vector full = pred.predict(data.features());
  std::vector<double> gain(static_cast<std::size_t>(n));
  parallel_for(gain.size(), [&](std::size_t i) {
    auto rng = make_rng(derive_seed(seed, i));
    Matrix block(imputation_samples, data.p());
    for (Index d = 0; d < imputation_samples; ++d) {
      block.row(d) = data.features().row(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
    }
    const double y = data.target()(static_cast<Index>(i));
    gain[i] = loss.pointwise(y, pred.predict(block).mean()) - loss.pointwise(y, full(static_cast<Index>(i)));
  });
  return mean(gain);
}

// ---------------------------------------------------------------------------

ImportanceResult grouped_pfi(const Predictor& pred, const Dataset& data, const Loss& loss,
                             const std::vector<FeatureGroup>& groups, int repeats, RngSeed seed) {
  check_repeats(data, repeats);
  if (groups.empty()) throw Error("grouped_pfi needs at least one group");
  std::set<Index> seen;
  std::vector<std::string> names;
  for (const auto& g : groups) {
    if (g.features.empty()) throw Error("group '" + g.name + "' is empty");
    for (Index j : g.features) {
      if (j < 0 || j >= data.p()) throw Error("group '" + g.name + "': feature index out of range");
      if (!seen.insert(j).second) {
        throw Error("groups overlap: feature '" + data.feature_name(j) + "' appears twice");
      }
    }
    names.push_back(g.name);
  }
  const double baseline = evaluate(pred, data, loss);
  const auto leaves = single_leaf(data.n());
  std::vector<std::vector<double>> reps(groups.size());
  parallel_for(groups.size(), [&](std::size_t u) {
    const auto& cols = groups[u].features;
    // Stream keyed by the smallest member so singleton groups match pfi.
    const auto stream = static_cast<std::uint64_t>(*std::min_element(cols.begin(), cols.end()));
    reps[u] = permutation_replicates(pred, data, loss, baseline, cols, leaves, repeats, seed, stream);
  });
  return ImportanceResult::from_replicates(ImportanceUnit::group, std::move(names), std::move(reps));
}

}  // namespace iml
