#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace iml {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// All toolkit failures surface as iml::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Warnings go through a process-wide sink so the CLI can collect them into
// reports. The default sink writes to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

// ---------------------------------------------------------------------------
// Randomness

struct RngSeed {
  std::uint64_t value = 0;
  friend bool operator==(RngSeed, RngSeed) = default;
};

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed for one work unit. Every stochastic
// method seeds its work units this way so results do not depend on how the
// units are scheduled across threads.
RngSeed derive_seed(RngSeed seed, std::uint64_t stream);
RngSeed derive_seed(RngSeed seed, std::uint64_t stream_a, std::uint64_t stream_b);

Rng make_rng(RngSeed seed);

// Uniform random permutation of 0..n-1.
std::vector<Index> random_permutation(Index n, Rng& rng);

// ---------------------------------------------------------------------------
// Dataset

class Dataset {
 public:
  Dataset(Matrix features, Vector target, std::vector<std::string> feature_names);
  // Names default to X1..Xp.
  Dataset(Matrix features, Vector target);

  Index n() const { return features_.rows(); }
  Index p() const { return features_.cols(); }

  const Matrix& features() const { return features_; }
  const Vector& target() const { return target_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::string& feature_name(Index j) const { return names_.at(static_cast<std::size_t>(j)); }

  // Throws if no feature carries this name.
  Index feature_index(std::string_view name) const;

  Dataset rows(std::span<const Index> indices) const;
  Dataset with_features(Matrix features) const;
  Dataset with_target(Vector target) const;

  static Dataset from_csv(const std::filesystem::path& path, std::string_view target_column);
  void to_csv(const std::filesystem::path& path, std::string_view target_column = "y") const;

 private:
  Matrix features_;
  Vector target_;
  std::vector<std::string> names_;
};

std::vector<std::string> default_feature_names(Index p);

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             RngSeed seed);

// ---------------------------------------------------------------------------
// Predictor

// Opaque model handle: maps an m x p feature matrix to m predictions.
// Implementations must be deterministic, must not mutate the input and must
// be safe to call from several threads at once.
class Predictor {
 public:
  using Fn = std::function<Vector(const Matrix&)>;

  explicit Predictor(Fn fn);

  Vector predict(const Matrix& x) const;
  Vector operator()(const Matrix& x) const { return predict(x); }

  static Predictor constant(double value);
  static Predictor linear(Vector coefficients, double intercept = 0.0);

 private:
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Loss

enum class LossKind { squared_error, absolute_error };

class Loss {
 public:
  explicit Loss(LossKind kind = LossKind::squared_error) : kind_(kind) {}

  LossKind kind() const { return kind_; }
  std::string_view name() const;

  double pointwise(double y_true, double y_pred) const {
    const double d = y_true - y_pred;
    return kind_ == LossKind::squared_error ? d * d : (d < 0 ? -d : d);
  }
  // Mean loss over observations.
  double operator()(const Vector& y_true, const Vector& y_pred) const;

  static Loss parse(std::string_view name);

 private:
  LossKind kind_;
};

double evaluate(const Predictor& predictor, const Dataset& data, const Loss& loss);

// ---------------------------------------------------------------------------
// Grids

enum class GridStrategy { equidistant, quantile, subsample };

std::string_view to_string(GridStrategy strategy);
GridStrategy parse_grid_strategy(std::string_view name);

struct Grid {
  Index feature_index = 0;
  std::vector<double> values;  // strictly ascending
  GridStrategy strategy = GridStrategy::quantile;

  std::size_t size() const { return values.size(); }
};

inline constexpr int kDefaultGridSize = 20;

Grid build_grid(const Dataset& data, Index feature_index,
                GridStrategy strategy = GridStrategy::quantile, int size = kDefaultGridSize,
                RngSeed seed = {});

// Linear-interpolation empirical quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);
// Sorts a copy of `values` and evaluates each probability.
std::vector<double> quantiles(std::vector<double> values, std::span<const double> probs);

double mean(std::span<const double> values);
double sample_variance(std::span<const double> values);

// ---------------------------------------------------------------------------
// Matrix helpers shared across the method modules

// Copy of `x` with column `feature` set to `value` in every row.
Matrix with_column_value(const Matrix& x, Index feature, double value);

std::vector<double> column_values(const Matrix& x, Index feature);

}  // namespace iml
