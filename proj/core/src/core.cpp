#include "iml/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace iml {
namespace {

std::mutex g_warning_mutex;
WarningHandler g_warning_handler;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error("line " + std::to_string(line_no) + ": not a finite number: '" + text + "'");
  }
  return value;
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warning_mutex);
  g_warning_handler = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_warning_mutex);
  if (g_warning_handler) {
    g_warning_handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngSeed derive_seed(RngSeed seed, std::uint64_t stream) {
  return RngSeed{splitmix64(splitmix64(seed.value) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))};
}

RngSeed derive_seed(RngSeed seed, std::uint64_t stream_a, std::uint64_t stream_b) {
  return derive_seed(derive_seed(seed, stream_a), stream_b);
}

Rng make_rng(RngSeed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.value),
                    static_cast<std::uint32_t>(seed.value >> 32)};
  return Rng(seq);
}

std::vector<Index> random_permutation(Index n, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  // Fisher-Yates with an explicit draw so the sequence is identical across
  // standard library implementations.
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

// ---------------------------------------------------------------------------

std::vector<std::string> default_feature_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  return names;
}

Dataset::Dataset(Matrix features, Vector target, std::vector<std::string> feature_names)
    : features_(std::move(features)), target_(std::move(target)), names_(std::move(feature_names)) {
  if (features_.rows() < 1) throw Error("dataset needs at least one observation");
  if (features_.cols() < 1) throw Error("dataset needs at least one feature");
  if (target_.size() != features_.rows()) {
    throw Error("target length " + std::to_string(target_.size()) + " does not match " +
                std::to_string(features_.rows()) + " feature rows");
  }
  if (static_cast<Index>(names_.size()) != features_.cols()) {
    throw Error("expected " + std::to_string(features_.cols()) + " feature names, got " +
                std::to_string(names_.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) throw Error("duplicate feature name '" + name + "'");
  }
  if (!features_.allFinite() || !target_.allFinite()) {
    throw Error("dataset contains missing or non-finite values");
  }
}

Dataset::Dataset(Matrix features, Vector target)
    : Dataset(Matrix(features), std::move(target), default_feature_names(features.cols())) {}

Index Dataset::feature_index(std::string_view name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return static_cast<Index>(j);
  }
  throw Error("unknown feature '" + std::string(name) + "'");
}

Dataset Dataset::rows(std::span<const Index> indices) const {
  Matrix x(static_cast<Index>(indices.size()), p());
  Vector y(static_cast<Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Index i = indices[r];
    if (i < 0 || i >= n()) throw Error("row index out of range");
    x.row(static_cast<Index>(r)) = features_.row(i);
    y(static_cast<Index>(r)) = target_(i);
  }
  return Dataset(std::move(x), std::move(y), names_);
}

Dataset Dataset::with_features(Matrix features) const {
  return Dataset(std::move(features), target_, names_);
}

Dataset Dataset::with_target(Vector target) const {
  return Dataset(features_, std::move(target), names_);
}

Dataset Dataset::from_csv(const std::filesystem::path& path, std::string_view target_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path.string() + "' is empty");
  const auto header = split_csv_line(line);
  std::size_t target_pos = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target_column) target_pos = c;
  }
  if (target_pos == header.size()) {
    throw Error("target column '" + std::string(target_column) + "' not in header of '" +
                path.string() + "'");
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target_pos) names.push_back(header[c]);
  }
  std::vector<double> values;
  std::vector<double> targets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) throw Error("line " + std::to_string(line_no) + ": missing value");
      const double v = parse_double(fields[c], line_no);
      (c == target_pos ? targets : values).push_back(v);
    }
  }
  const auto n = static_cast<Index>(targets.size());
  const auto p = static_cast<Index>(names.size());
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = values[static_cast<std::size_t>(i * p + j)];
  }
  return Dataset(std::move(x), Eigen::Map<Vector>(targets.data(), n), std::move(names));
}

void Dataset::to_csv(const std::filesystem::path& path, std::string_view target_column) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.precision(17);
  for (const auto& name : names_) out << name << ',';
  out << target_column << '\n';
  for (Index i = 0; i < n(); ++i) {
    for (Index j = 0; j < p(); ++j) out << features_(i, j) << ',';
    out << target_(i) << '\n';
  }
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             RngSeed seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("test fraction must lie strictly between 0 and 1");
  }
  const auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(data.n())));
  if (n_test < 1 || n_test >= data.n()) {
    throw Error("test fraction " + std::to_string(test_fraction) + " leaves an empty partition for n=" +
                std::to_string(data.n()));
  }
  auto rng = make_rng(seed);
  const auto perm = random_permutation(data.n(), rng);
  std::vector<Index> test(perm.begin(), perm.begin() + n_test);
  std::vector<Index> train(perm.begin() + n_test, perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.rows(train), data.rows(test)};
}

// ---------------------------------------------------------------------------

Predictor::Predictor(Fn fn) : fn_(std::move(fn)) {
  if (!fn_) throw Error("predictor needs a callable");
}

Vector Predictor::predict(const Matrix& x) const {
  Vector out = fn_(x);
  if (out.size() != x.rows()) throw Error("predictor returned the wrong number of predictions");
  return out;
}

Predictor Predictor::constant(double value) {
  return Predictor([value](const Matrix& x) { return Vector::Constant(x.rows(), value); });
}

Predictor Predictor::linear(Vector coefficients, double intercept) {
  return Predictor([coef = std::move(coefficients), intercept](const Matrix& x) -> Vector {
    if (x.cols() != coef.size()) throw Error("linear predictor: feature count mismatch");
    return (x * coef).array() + intercept;
  });
}

// ---------------------------------------------------------------------------

std::string_view Loss::name() const {
  return kind_ == LossKind::squared_error ? "squared_error" : "absolute_error";
}

double Loss::operator()(const Vector& y_true, const Vector& y_pred) const {
  if (y_true.size() != y_pred.size() || y_true.size() == 0) {
    throw Error("loss: prediction and target lengths differ or are empty");
  }
  if (kind_ == LossKind::squared_error) return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
  return (y_true - y_pred).cwiseAbs().sum() / static_cast<double>(y_true.size());
}

Loss Loss::parse(std::string_view name) {
  if (name == "squared_error" || name == "mse") return Loss(LossKind::squared_error);
  if (name == "absolute_error" || name == "mae") return Loss(LossKind::absolute_error);
  throw Error("unknown loss '" + std::string(name) + "'");
}

double evaluate(const Predictor& predictor, const Dataset& data, const Loss& loss) {
  return loss(data.target(), predictor.predict(data.features()));
}

// ---------------------------------------------------------------------------

std::string_view to_string(GridStrategy strategy) {
  switch (strategy) {
    case GridStrategy::equidistant: return "equidistant";
    case GridStrategy::quantile: return "quantile";
    case GridStrategy::subsample: return "subsample";
  }
  return "?";
}

GridStrategy parse_grid_strategy(std::string_view name) {
  if (name == "equidistant") return GridStrategy::equidistant;
  if (name == "quantile") return GridStrategy::quantile;
  if (name == "subsample") return GridStrategy::subsample;
  throw Error("unknown grid strategy '" + std::string(name) + "'");
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error("quantile of empty sample");
  if (prob <= 0.0) return sorted.front();
  if (prob >= 1.0) return sorted.back();
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> quantiles(std::vector<double> values, std::span<const double> probs) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(probs.size());
  for (double q : probs) out.push_back(quantile_sorted(values, q));
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error("mean of empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

Grid build_grid(const Dataset& data, Index feature_index, GridStrategy strategy, int size,
                RngSeed seed) {
  if (feature_index < 0 || feature_index >= data.p()) throw Error("feature index out of range");
  if (size < 2) throw Error("grid size must be at least 2");
  auto column = column_values(data.features(), feature_index);
  std::sort(column.begin(), column.end());
  const double lo = column.front();
  const double hi = column.back();
  if (!(hi > lo)) throw Error("degenerate feature '" + data.feature_name(feature_index) + "'");

  Grid grid{feature_index, {}, strategy};
  switch (strategy) {
    case GridStrategy::equidistant:
      for (int k = 0; k < size; ++k) {
        grid.values.push_back(k + 1 == size ? hi : lo + (hi - lo) * k / (size - 1));
      }
      break;
    case GridStrategy::quantile:
      for (int k = 0; k < size; ++k) {
        grid.values.push_back(quantile_sorted(column, static_cast<double>(k) / (size - 1)));
      }
      grid.values.erase(std::unique(grid.values.begin(), grid.values.end()), grid.values.end());
      break;
    case GridStrategy::subsample: {
      if (size > data.n()) throw Error("subsample grid larger than the number of observations");
      column.erase(std::unique(column.begin(), column.end()), column.end());
      auto rng = make_rng(seed);
      const auto perm = random_permutation(static_cast<Index>(column.size()), rng);
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(size), column.size());
      for (std::size_t k = 0; k < take; ++k) grid.values.push_back(column[static_cast<std::size_t>(perm[k])]);
      std::sort(grid.values.begin(), grid.values.end());
      break;
    }
  }
  return grid;
}

Matrix with_column_value(const Matrix& x, Index feature, double value) {
  Matrix out = x;
  out.col(feature).setConstant(value);
  return out;
}

std::vector<double> column_values(const Matrix& x, Index feature) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = x(i, feature);
  return out;
}

}  // namespace iml
