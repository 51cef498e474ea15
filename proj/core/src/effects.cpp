#include "iml/effects.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csv_util.hpp"
#include "iml/parallel.hpp"

namespace iml {
namespace {

void check_grid(const Dataset& data, const Grid& grid) {
  if (grid.feature_index < 0 || grid.feature_index >= data.p()) {
    throw Error("grid feature index out of range");
  }
  if (grid.values.size() < 2) throw Error("grid needs at least two values");
  for (std::size_t g = 1; g < grid.values.size(); ++g) {
    if (!(grid.values[g - 1] < grid.values[g])) throw Error("grid values must be strictly increasing");
  }
}

}  // namespace

std::string_view to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::pdp: return "pdp";
    case EffectKind::ice: return "ice";
    case EffectKind::centered_ice: return "centered_ice";
    case EffectKind::derivative_ice: return "derivative_ice";
    case EffectKind::ale: return "ale";
    case EffectKind::mplot: return "mplot";
  }
  return "?";
}

EffectCurve ice(const Predictor& pred, const Dataset& data, const Grid& grid) {
  check_grid(data, grid);
  const auto n_grid = static_cast<Index>(grid.size());
  Matrix per_obs(data.n(), n_grid);
  parallel_for(grid.size(), [&](std::size_t g) {
    per_obs.col(static_cast<Index>(g)) =
        pred.predict(with_column_value(data.features(), grid.feature_index, grid.values[g]));
  });
  EffectCurve curve;
  curve.grid = grid;
  curve.kind = EffectKind::ice;
  curve.values.resize(grid.size());
  for (Index g = 0; g < n_grid; ++g) curve.values[static_cast<std::size_t>(g)] = per_obs.col(g).mean();
  curve.per_observation = std::move(per_obs);
  return curve;
}

EffectCurve pdp(const Predictor& pred, const Dataset& data, const Grid& grid) {
  EffectCurve curve = ice(pred, data, grid);
  curve.kind = EffectKind::pdp;
  curve.per_observation.reset();
  return curve;
}

EffectCurve centered_ice(const EffectCurve& curve, std::size_t anchor) {
  if (curve.kind != EffectKind::ice || !curve.per_observation) {
    throw Error("centered_ice needs an ICE curve with per-observation values");
  }
  if (anchor >= curve.grid.size()) throw Error("anchor grid position out of range");
  EffectCurve out = curve;
  Matrix& rows = *out.per_observation;
  const Vector anchor_col = rows.col(static_cast<Index>(anchor));
  rows.colwise() -= anchor_col;
  for (Index g = 0; g < rows.cols(); ++g) out.values[static_cast<std::size_t>(g)] = rows.col(g).mean();
  out.kind = EffectKind::centered_ice;
  out.centered = true;
  return out;
}

std::pair<EffectCurve, std::vector<double>> derivative_ice(const EffectCurve& curve) {
  if (curve.kind != EffectKind::ice || !curve.per_observation) {
    throw Error("derivative_ice needs an ICE curve with per-observation values");
  }
  const auto& v = curve.grid.values;
  if (v.size() < 2) throw Error("derivative_ice needs a grid with at least two points");
  const Matrix& rows = *curve.per_observation;
  const Index n_grid = rows.cols();
  Matrix slopes(rows.rows(), n_grid);
  for (Index g = 0; g < n_grid; ++g) {
    const Index lo = g == 0 ? 0 : g - 1;
    const Index hi = g + 1 == n_grid ? g : g + 1;
    const double dx = v[static_cast<std::size_t>(hi)] - v[static_cast<std::size_t>(lo)];
    slopes.col(g) = (rows.col(hi) - rows.col(lo)) / dx;
  }
  EffectCurve out;
  out.grid = curve.grid;
  out.kind = EffectKind::derivative_ice;
  out.values.resize(static_cast<std::size_t>(n_grid));
  std::vector<double> sd(static_cast<std::size_t>(n_grid), 0.0);
  for (Index g = 0; g < n_grid; ++g) {
    const double m = slopes.col(g).mean();
    out.values[static_cast<std::size_t>(g)] = m;
    if (slopes.rows() > 1) {
      sd[static_cast<std::size_t>(g)] =
          std::sqrt((slopes.col(g).array() - m).square().sum() / static_cast<double>(slopes.rows() - 1));
    }
  }
  out.per_observation = std::move(slopes);
  return {std::move(out), std::move(sd)};
}

Effect2D pdp_2d(const Predictor& pred, const Dataset& data, const Grid& grid_a, const Grid& grid_b) {
  check_grid(data, grid_a);
  check_grid(data, grid_b);
  if (grid_a.feature_index == grid_b.feature_index) {
    throw Error("pdp_2d needs two distinct features");
  }
  Effect2D out{grid_a, grid_b, Matrix(static_cast<Index>(grid_a.size()), static_cast<Index>(grid_b.size()))};
  const std::size_t nb = grid_b.size();
  parallel_for(grid_a.size() * nb, [&](std::size_t cell) {
    const std::size_t a = cell / nb;
    const std::size_t b = cell % nb;
    Matrix x = with_column_value(data.features(), grid_a.feature_index, grid_a.values[a]);
    x.col(grid_b.feature_index).setConstant(grid_b.values[b]);
    out.values(static_cast<Index>(a), static_cast<Index>(b)) = pred.predict(x).mean();
  });
  return out;
}

double interval_weighted_mean(std::span<const double> edge_values, std::span<const Index> counts) {
  if (edge_values.size() != counts.size() + 1) throw Error("interval counts do not match edges");
  double total = 0.0;
  double n = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    total += static_cast<double>(counts[k]) * 0.5 * (edge_values[k] + edge_values[k + 1]);
    n += static_cast<double>(counts[k]);
  }
  if (n <= 0.0) throw Error("no observations in intervals");
  return total / n;
}

std::vector<double> center_on_intervals(std::span<const double> edge_values,
                                        std::span<const Index> counts) {
  const double c = interval_weighted_mean(edge_values, counts);
  std::vector<double> out(edge_values.begin(), edge_values.end());
  for (auto& v : out) v -= c;
  return out;
}

EffectCurve ale(const Predictor& pred, const Dataset& data, Index feature_index, int n_intervals) {
  if (n_intervals < 1) throw Error("ALE needs at least one interval");
  if (feature_index < 0 || feature_index >= data.p()) throw Error("feature index out of range");
  auto column = column_values(data.features(), feature_index);
  auto sorted = column;
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.front() < sorted.back())) {
    throw Error("degenerate feature '" + data.feature_name(feature_index) + "'");
  }

  std::vector<double> edges;
  for (int k = 0; k <= n_intervals; ++k) {
    edges.push_back(quantile_sorted(sorted, static_cast<double>(k) / n_intervals));
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // Interval k (1-based) holds (edges[k-1], edges[k]]; the minimum joins interval 1.
  auto interval_of = [](const std::vector<double>& e, double x) {
    auto k = static_cast<std::size_t>(std::lower_bound(e.begin(), e.end(), x) - e.begin());
    return std::max<std::size_t>(k, 1);
  };
  std::vector<Index> counts(edges.size(), 0);
  for (double x : column) ++counts[interval_of(edges, x)];
  // Merge empty intervals into their left neighbour.
  std::vector<double> merged{edges.front()};
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (counts[k] > 0) {
      merged.push_back(edges[k]);
    } else {
      merged.back() = edges[k];
    }
  }
  edges = std::move(merged);
  const std::size_t n_int = edges.size() - 1;

  std::vector<std::size_t> assign(column.size());
  Matrix upper = data.features();
  Matrix lower = data.features();
  for (std::size_t i = 0; i < column.size(); ++i) {
    assign[i] = interval_of(edges, column[i]);
    upper(static_cast<Index>(i), feature_index) = edges[assign[i]];
    lower(static_cast<Index>(i), feature_index) = edges[assign[i] - 1];
  }
  const Vector diff = pred.predict(upper) - pred.predict(lower);

  std::vector<double> sums(n_int + 1, 0.0);
  std::vector<Index> interval_counts(n_int, 0);
  for (std::size_t i = 0; i < column.size(); ++i) {
    sums[assign[i]] += diff(static_cast<Index>(i));
    ++interval_counts[assign[i] - 1];
  }
  std::vector<double> acc(n_int + 1, 0.0);
  for (std::size_t k = 1; k <= n_int; ++k) {
    acc[k] = acc[k - 1] + sums[k] / static_cast<double>(interval_counts[k - 1]);
  }

  EffectCurve curve;
  curve.grid = Grid{feature_index, edges, GridStrategy::quantile};
  curve.kind = EffectKind::ale;
  curve.centered = true;
  curve.values = center_on_intervals(acc, interval_counts);
  curve.interval_counts = std::move(interval_counts);
  return curve;
}

EffectCurve mplot(const Predictor& pred, const Dataset& data, const Grid& grid,
                  double neighborhood_fraction) {
  check_grid(data, grid);
  if (!(neighborhood_fraction > 0.0 && neighborhood_fraction <= 1.0)) {
    throw Error("neighborhood fraction must lie in (0, 1]");
  }
  const auto k = static_cast<std::size_t>(
      std::ceil(neighborhood_fraction * static_cast<double>(data.n()) - 1e-9));
  if (k == 0) throw Error("empty M-plot neighborhood");
  const Vector preds = pred.predict(data.features());
  const auto column = column_values(data.features(), grid.feature_index);

  EffectCurve curve;
  curve.grid = grid;
  curve.kind = EffectKind::mplot;
  curve.values.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    std::vector<std::pair<double, Index>> dist(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
      dist[i] = {std::abs(column[i] - grid.values[g]), static_cast<Index>(i)};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double s = 0.0;
    for (std::size_t m = 0; m < k; ++m) s += preds(dist[m].second);
    curve.values[g] = s / static_cast<double>(k);
  });
  return curve;
}

void write_curve_csv(const EffectCurve& curve, const std::filesystem::path& path,
                     bool per_observation) {
  auto out = detail::open_csv(path);
  if (per_observation) {
    if (!curve.per_observation) throw Error("curve has no per-observation values");
    const Matrix& rows = *curve.per_observation;
    out << "grid,value,row_id\n";
    for (Index i = 0; i < rows.rows(); ++i) {
      for (Index g = 0; g < rows.cols(); ++g) {
        out << detail::fmt(curve.grid.values[static_cast<std::size_t>(g)]) << ','
            << detail::fmt(rows(i, g)) << ',' << i << '\n';
      }
    }
    return;
  }
  out << "grid,value\n";
  for (std::size_t g = 0; g < curve.values.size(); ++g) {
    out << detail::fmt(curve.grid.values[g]) << ',' << detail::fmt(curve.values[g]) << '\n';
  }
}

void write_surface_csv(const Effect2D& surface, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "a,b,value\n";
  for (std::size_t a = 0; a < surface.grid_a.size(); ++a) {
    for (std::size_t b = 0; b < surface.grid_b.size(); ++b) {
      out << detail::fmt(surface.grid_a.values[a]) << ',' << detail::fmt(surface.grid_b.values[b]) << ','
          << detail::fmt(surface.values(static_cast<Index>(a), static_cast<Index>(b))) << '\n';
    }
  }
}

}  // namespace iml
