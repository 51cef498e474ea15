#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "iml/core.hpp"
#include "iml/dgp.hpp"
#include "iml/importance.hpp"
#include "iml/learners.hpp"

namespace iml {

enum class BandSource { estimation_only, refit };

std::string_view to_string(BandSource source);

struct UncertaintyBand {
  Grid grid;
  std::vector<double> mean_curve;
  std::vector<double> lower;  // pointwise q05 of the replicate curves
  std::vector<double> upper;  // pointwise q95
  BandSource source = BandSource::estimation_only;
  int n_replicates = 0;
  std::vector<std::vector<double>> replicate_curves;

  double mean_width() const;
  // Fraction of grid points where lower <= curve <= upper.
  double coverage(std::span<const double> curve) const;
};

// Band over replicate curves; lower and upper are widened to the mean where
// the empirical quantiles would exclude it.
UncertaintyBand band_from_curves(Grid grid, std::vector<std::vector<double>> curves,
                                 BandSource source);
// Same band after shifting every replicate curve to mean zero over the grid.
UncertaintyBand centered(const UncertaintyBand& band);

// Model held fixed; PDP recomputed on seeded subsamples of `subsample_n` rows.
UncertaintyBand pdp_band_estimation(const Predictor& pred, const Dataset& data, const Grid& grid,
                                    int n_replicates, Index subsample_n, RngSeed seed);

using Fitter = std::function<Predictor(const Dataset&, RngSeed)>;
using Sampler = std::function<Dataset(RngSeed)>;

// Each replicate draws a dataset, fits a model on it and computes the PDP on
// the same draw.
UncertaintyBand pdp_band_refit(const Fitter& fitter, const Sampler& draw, const Grid& grid,
                               int n_replicates, RngSeed seed);
// Fresh samples of `n_per_fit` rows from the process.
UncertaintyBand pdp_band_refit(const LearnerSpec& learner, const DgpSpec& dgp, const Grid& grid,
                               int n_replicates, Index n_per_fit, RngSeed seed);
// Bootstrap resamples of `n_per_fit` rows from fixed data.
UncertaintyBand pdp_band_refit(const LearnerSpec& learner, const Dataset& data, const Grid& grid,
                               int n_replicates, Index n_per_fit, RngSeed seed);

// CSV: grid,mean,lower,upper,source
void write_band_csv(const UncertaintyBand& band, const std::filesystem::path& path);

inline constexpr int kMinCiRepeats = 10;

// pfi with at least kMinCiRepeats permutation repeats; model fixed.
ImportanceResult pfi_ci(const Predictor& pred, const Dataset& data, const Loss& loss, int repeats,
                        RngSeed seed);

enum class Correction { none, bonferroni, holm };

std::string_view to_string(Correction method);
Correction parse_correction(std::string_view name);

struct TestedImportance {
  std::vector<std::string> names;
  std::vector<double> observed;
  std::vector<double> p_values_raw;
  std::vector<double> p_values_adjusted;
  Correction method = Correction::none;
  double alpha = 0.05;
  std::vector<bool> significant;
  int n_null_replicates = 0;

  int n_significant() const;
};

inline constexpr int kMinTargetPermutations = 20;

struct PimpOptions {
  int n_target_permutations = 30;
  int pfi_repeats = 5;
};

// Observed PFI of a model fit on (X, y); each null replicate refits on a
// permuted target and recomputes PFI. p = (1 + #{null >= observed}) / (s + 1)
// over the s successful replicates. Raw p-values only (method none).
TestedImportance pimp(const LearnerSpec& learner, const Dataset& data, const Loss& loss,
                      const PimpOptions& options, RngSeed seed);
// Held-out variant: models fit on train, PFI measured on test; null replicates
// permute both targets with independent permutations.
TestedImportance pimp(const LearnerSpec& learner, const Dataset& train, const Dataset& test,
                      const Loss& loss, const PimpOptions& options, RngSeed seed);

// Generic form over any fitter; used by the learner overloads.
TestedImportance pimp(const Fitter& fitter, const Dataset& train, const Dataset* test,
                      const Loss& loss, const PimpOptions& options, RngSeed seed);

std::vector<double> adjust(std::span<const double> raw, Correction method);

TestedImportance adjust_pvalues(std::span<const double> raw, Correction method, double alpha);
// Keeps names and observed values, replaces the adjustment.
TestedImportance adjust_pvalues(const TestedImportance& tested, Correction method, double alpha);

// CSV: feature,observed,p_raw,p_adjusted,significant
void write_tested_csv(const TestedImportance& tested, const std::filesystem::path& path);

}  // namespace iml
