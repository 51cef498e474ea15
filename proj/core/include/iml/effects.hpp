#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "iml/core.hpp"

namespace iml {

enum class EffectKind { pdp, ice, centered_ice, derivative_ice, ale, mplot };

std::string_view to_string(EffectKind kind);

struct EffectCurve {
  Grid grid;
  std::vector<double> values;           // aggregate per grid point
  std::optional<Matrix> per_observation;  // n x |grid| for ICE-type curves
  EffectKind kind = EffectKind::pdp;
  bool centered = false;
  // ALE only: observations per interval (|grid| - 1 entries).
  std::vector<Index> interval_counts;
};

struct Effect2D {
  Grid grid_a;
  Grid grid_b;
  Matrix values;  // |grid_a| x |grid_b|
};

// per_observation(i, g) = prediction for row i with the grid feature set to
// grid value g; values are the column means (the PDP).
EffectCurve ice(const Predictor& pred, const Dataset& data, const Grid& grid);
EffectCurve pdp(const Predictor& pred, const Dataset& data, const Grid& grid);

// Shifts each ICE row so its value at grid position `anchor` is zero.
EffectCurve centered_ice(const EffectCurve& curve, std::size_t anchor = 0);

// Per-row finite-difference slopes (central inside, one-sided at the ends)
// and the per-grid-point standard deviation of those slopes across rows.
std::pair<EffectCurve, std::vector<double>> derivative_ice(const EffectCurve& curve);

Effect2D pdp_2d(const Predictor& pred, const Dataset& data, const Grid& grid_a, const Grid& grid_b);

inline constexpr int kDefaultAleIntervals = 20;

// First-order accumulated local effects on quantile intervals. The curve is
// reported at the interval edges and centered so that the count-weighted
// mean over intervals (edge midpoints) is zero.
EffectCurve ale(const Predictor& pred, const Dataset& data, Index feature_index,
                int n_intervals = kDefaultAleIntervals);

// Count-weighted mean used for ALE centering: sum_k n_k (v_{k-1} + v_k) / 2 / n.
double interval_weighted_mean(std::span<const double> edge_values, std::span<const Index> counts);

// Centers any curve evaluated on ALE edges with the ALE weighting, so PDP and
// ALE can be compared on a common footing.
std::vector<double> center_on_intervals(std::span<const double> edge_values,
                                        std::span<const Index> counts);

inline constexpr double kDefaultNeighborhoodFraction = 0.1;

// Conditional (marginal) plot: at each grid value, the mean unperturbed
// prediction of the ceil(fraction * n) observations closest in the feature.
EffectCurve mplot(const Predictor& pred, const Dataset& data, const Grid& grid,
                  double neighborhood_fraction = kDefaultNeighborhoodFraction);

// CSV: grid,value (aggregate) or grid,value,row_id (per observation).
void write_curve_csv(const EffectCurve& curve, const std::filesystem::path& path,
                     bool per_observation = false);
// Long form a,b,value.
void write_surface_csv(const Effect2D& surface, const std::filesystem::path& path);

}  // namespace iml
