#include "iml/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "csv_util.hpp"
#include "iml/effects.hpp"
#include "iml/parallel.hpp"

namespace iml {
namespace {

constexpr double kBandProbs[] = {0.05, 0.95};

void check_replicates(int n_replicates) {
  if (n_replicates < 2) throw Error("uncertainty bands need at least two replicates");
}

std::vector<Index> subsample(Index n, Index size, RngSeed seed) {
  auto rng = make_rng(seed);
  auto perm = random_permutation(n, rng);
  perm.resize(static_cast<std::size_t>(size));
  std::sort(perm.begin(), perm.end());
  return perm;
}

std::vector<Index> bootstrap(Index n, Index size, RngSeed seed) {
  auto rng = make_rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> rows(static_cast<std::size_t>(size));
  for (auto& r : rows) r = pick(rng);
  std::sort(rows.begin(), rows.end());
  return rows;
}

Dataset permute_target(const Dataset& data, Rng& rng) {
  const auto perm = random_permutation(data.n(), rng);
  Vector y(data.n());
  for (Index i = 0; i < data.n(); ++i) y(i) = data.target()(perm[static_cast<std::size_t>(i)]);
  return data.with_target(std::move(y));
}

}  // namespace

std::string_view to_string(BandSource source) {
  return source == BandSource::refit ? "refit" : "estimation_only";
}

double UncertaintyBand::mean_width() const {
  double s = 0.0;
  for (std::size_t g = 0; g < lower.size(); ++g) s += upper[g] - lower[g];
  return lower.empty() ? 0.0 : s / static_cast<double>(lower.size());
}

double UncertaintyBand::coverage(std::span<const double> curve) const {
  if (curve.size() != lower.size()) throw Error("curve and band differ in length");
  std::size_t inside = 0;
  for (std::size_t g = 0; g < curve.size(); ++g) {
    if (lower[g] <= curve[g] && curve[g] <= upper[g]) ++inside;
  }
  return curve.empty() ? 0.0 : static_cast<double>(inside) / static_cast<double>(curve.size());
}

UncertaintyBand band_from_curves(Grid grid, std::vector<std::vector<double>> curves, BandSource source) {
  check_replicates(static_cast<int>(curves.size()));
  const std::size_t g_count = grid.values.size();
  for (const auto& c : curves) {
    if (c.size() != g_count) throw Error("replicate curve length does not match the grid");
  }
  UncertaintyBand band;
  band.grid = std::move(grid);
  band.source = source;
  band.n_replicates = static_cast<int>(curves.size());
  std::vector<double> column(curves.size());
  for (std::size_t g = 0; g < g_count; ++g) {
    for (std::size_t r = 0; r < curves.size(); ++r) column[r] = curves[r][g];
    const double m = mean(column);
    const auto q = quantiles(column, kBandProbs);
    band.mean_curve.push_back(m);
    band.lower.push_back(std::min(q[0], m));
    band.upper.push_back(std::max(q[1], m));
  }
  band.replicate_curves = std::move(curves);
  return band;
}

UncertaintyBand centered(const UncertaintyBand& band) {
  auto curves = band.replicate_curves;
  for (auto& c : curves) {
    const double m = mean(c);
    for (double& v : c) v -= m;
  }
  return band_from_curves(band.grid, std::move(curves), band.source);
}

UncertaintyBand pdp_band_estimation(const Predictor& pred, const Dataset& data, const Grid& grid,
                                    int n_replicates, Index subsample_n, RngSeed seed) {
  check_replicates(n_replicates);
  if (subsample_n < 1 || subsample_n > data.n()) throw Error("subsample size must lie in [1, n]");
  std::vector<std::vector<double>> curves(static_cast<std::size_t>(n_replicates));
  for (int r = 0; r < n_replicates; ++r) {
    const auto rows = subsample(data.n(), subsample_n, derive_seed(seed, static_cast<std::uint64_t>(r)));
    curves[static_cast<std::size_t>(r)] = pdp(pred, data.rows(rows), grid).values;
  }
  return band_from_curves(grid, std::move(curves), BandSource::estimation_only);
}

UncertaintyBand pdp_band_refit(const Fitter& fitter, const Sampler& draw, const Grid& grid,
                               int n_replicates, RngSeed seed) {
  check_replicates(n_replicates);
  std::vector<std::vector<double>> curves(static_cast<std::size_t>(n_replicates));
  for (int r = 0; r < n_replicates; ++r) {
    const auto u = static_cast<std::uint64_t>(r);
    try {
      const Dataset sample_r = draw(derive_seed(seed, u, 0));
      const Predictor model = fitter(sample_r, derive_seed(seed, u, 1));
      curves[static_cast<std::size_t>(r)] = pdp(model, sample_r, grid).values;
    } catch (const std::exception& e) {
      throw Error("refit replicate " + std::to_string(r) + ": " + e.what());
    }
  }
  return band_from_curves(grid, std::move(curves), BandSource::refit);
}

namespace {

Fitter learner_fitter(const LearnerSpec& learner) {
  return [learner](const Dataset& d, RngSeed s) { return fit(learner, d, s).predictor(); };
}

}  // namespace

UncertaintyBand pdp_band_refit(const LearnerSpec& learner, const DgpSpec& dgp, const Grid& grid,
                               int n_replicates, Index n_per_fit, RngSeed seed) {
  learner.validate();
  return pdp_band_refit(
      learner_fitter(learner), [&](RngSeed s) { return sample(dgp, n_per_fit, s); }, grid,
      n_replicates, seed);
}

UncertaintyBand pdp_band_refit(const LearnerSpec& learner, const Dataset& data, const Grid& grid,
                               int n_replicates, Index n_per_fit, RngSeed seed) {
  learner.validate();
  if (n_per_fit < 1) throw Error("refit sample size must be positive");
  return pdp_band_refit(
      learner_fitter(learner),
      [&](RngSeed s) { return data.rows(bootstrap(data.n(), n_per_fit, s)); }, grid, n_replicates,
      seed);
}

void write_band_csv(const UncertaintyBand& band, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "grid,mean,lower,upper,source\n";
  for (std::size_t g = 0; g < band.mean_curve.size(); ++g) {
    out << detail::fmt(band.grid.values[g]) << ',' << detail::fmt(band.mean_curve[g]) << ','
        << detail::fmt(band.lower[g]) << ',' << detail::fmt(band.upper[g]) << ',' << to_string(band.source)
        << '\n';
  }
}

ImportanceResult pfi_ci(const Predictor& pred, const Dataset& data, const Loss& loss, int repeats,
                        RngSeed seed) {
  if (repeats < kMinCiRepeats) {
    throw Error("pfi confidence bands need at least " + std::to_string(kMinCiRepeats) + " repeats");
  }
  return pfi(pred, data, loss, repeats, seed);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Correction method) {
  switch (method) {
    case Correction::none: return "none";
    case Correction::bonferroni: return "bonferroni";
    case Correction::holm: return "holm";
  }
  return "none";
}

Correction parse_correction(std::string_view name) {
  if (name == "none") return Correction::none;
  if (name == "bonferroni") return Correction::bonferroni;
  if (name == "holm") return Correction::holm;
  throw Error("unknown correction '" + std::string(name) + "'");
}

int TestedImportance::n_significant() const {
  return static_cast<int>(std::count(significant.begin(), significant.end(), true));
}

TestedImportance pimp(const Fitter& fitter, const Dataset& train, const Dataset* test,
                      const Loss& loss, const PimpOptions& options, RngSeed seed) {
  const int s = options.n_target_permutations;
  if (s < kMinTargetPermutations) {
    throw Error("pimp needs at least " + std::to_string(kMinTargetPermutations) + " target permutations");
  }
  if (test && test->p() != train.p()) throw Error("train and test feature counts differ");
  const Dataset& eval = test ? *test : train;
  const auto p = static_cast<std::size_t>(train.p());

  auto importance = [&](const Dataset& fit_data, const Dataset& eval_data, RngSeed fit_seed,
                        RngSeed pfi_seed) {
    const Predictor model = fitter(fit_data, fit_seed);
    return pfi(model, eval_data, loss, options.pfi_repeats, pfi_seed).scores;
  };

  const auto observed = importance(train, eval, derive_seed(seed, 0, 0), derive_seed(seed, 0, 1));

  std::vector<std::optional<std::vector<double>>> nulls(static_cast<std::size_t>(s));
  std::vector<std::string> failures(static_cast<std::size_t>(s));
  parallel_for(nulls.size(), [&](std::size_t b) {
    const auto u = static_cast<std::uint64_t>(b) + 1;
    try {
      auto rng = make_rng(derive_seed(seed, u, 2));
      const Dataset null_train = permute_target(train, rng);
      if (test) {
        const Dataset null_test = permute_target(*test, rng);
        nulls[b] = importance(null_train, null_test, derive_seed(seed, u, 0), derive_seed(seed, u, 1));
      } else {
        nulls[b] = importance(null_train, null_train, derive_seed(seed, u, 0), derive_seed(seed, u, 1));
      }
    } catch (const std::exception& e) {
      failures[b] = e.what();
    }
  });

  int successes = 0;
  for (std::size_t b = 0; b < nulls.size(); ++b) {
    if (nulls[b]) {
      ++successes;
    } else {
      warn("pimp: null replicate " + std::to_string(b) + " dropped (" + failures[b] + ")");
    }
  }
  if (10 * successes < 9 * s) {
    throw Error("pimp: only " + std::to_string(successes) + " of " + std::to_string(s) +
                " null replicates succeeded");
  }

  TestedImportance t;
  t.names = train.feature_names();
  t.observed = observed;
  t.n_null_replicates = successes;
  for (std::size_t j = 0; j < p; ++j) {
    int hits = 0;
    for (const auto& null : nulls) {
      if (null && (*null)[j] >= observed[j]) ++hits;
    }
    t.p_values_raw.push_back((1.0 + hits) / (successes + 1.0));
  }
  t.p_values_adjusted = t.p_values_raw;
  t.method = Correction::none;
  for (double q : t.p_values_adjusted) t.significant.push_back(q < t.alpha);
  return t;
}

TestedImportance pimp(const LearnerSpec& learner, const Dataset& data, const Loss& loss,
                      const PimpOptions& options, RngSeed seed) {
  learner.validate();
  return pimp(learner_fitter(learner), data, nullptr, loss, options, seed);
}

TestedImportance pimp(const LearnerSpec& learner, const Dataset& train, const Dataset& test,
                      const Loss& loss, const PimpOptions& options, RngSeed seed) {
  learner.validate();
  return pimp(learner_fitter(learner), train, &test, loss, options, seed);
}

std::vector<double> adjust(std::span<const double> raw, Correction method) {
  if (raw.empty()) throw Error("p-value adjustment needs at least one p-value");
  for (double p : raw) {
    if (!(p > 0.0 && p <= 1.0)) throw Error("p-values must lie in (0, 1]");
  }
  const auto m = static_cast<double>(raw.size());
  std::vector<double> out(raw.begin(), raw.end());
  if (method == Correction::bonferroni) {
    for (double& p : out) p = std::min(1.0, p * m);
  } else if (method == Correction::holm) {
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
    double running = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      running = std::max(running, std::min(1.0, (m - static_cast<double>(k)) * raw[order[k]]));
      out[order[k]] = running;
    }
  }
  return out;
}

TestedImportance adjust_pvalues(std::span<const double> raw, Correction method, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  TestedImportance t;
  t.p_values_raw.assign(raw.begin(), raw.end());
  t.p_values_adjusted = adjust(raw, method);
  t.method = method;
  t.alpha = alpha;
  t.names = default_feature_names(static_cast<Index>(raw.size()));
  t.observed.assign(raw.size(), 0.0);
  for (double q : t.p_values_adjusted) t.significant.push_back(q < alpha);
  return t;
}

TestedImportance adjust_pvalues(const TestedImportance& tested, Correction method, double alpha) {
  auto t = adjust_pvalues(tested.p_values_raw, method, alpha);
  t.names = tested.names;
  t.observed = tested.observed;
  t.n_null_replicates = tested.n_null_replicates;
  return t;
}

void write_tested_csv(const TestedImportance& tested, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "feature,observed,p_raw,p_adjusted,significant\n";
  for (std::size_t j = 0; j < tested.names.size(); ++j) {
    out << tested.names[j] << ',' << detail::fmt(tested.observed[j]) << ','
        << detail::fmt(tested.p_values_raw[j]) << ',' << detail::fmt(tested.p_values_adjusted[j]) << ','
        << (tested.significant[j] ? "true" : "false") << '\n';
  }
}

}  // namespace iml
