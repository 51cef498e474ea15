#include "iml/interactions.hpp"

#include <algorithm>
#include <array>

#include "csv_util.hpp"
#include "iml/effects.hpp"
#include "iml/parallel.hpp"

namespace iml {
namespace {

Matrix subsample_rows(const Dataset& data, Index max_rows, RngSeed seed) {
  if (max_rows < 2) throw Error("H statistic needs at least two rows");
  if (data.n() <= max_rows) return data.features();
  auto rng = make_rng(seed);
  auto perm = random_permutation(data.n(), rng);
  perm.resize(static_cast<std::size_t>(max_rows));
  std::sort(perm.begin(), perm.end());
  Matrix x(max_rows, data.p());
  for (Index r = 0; r < max_rows; ++r) x.row(r) = data.features().row(perm[static_cast<std::size_t>(r)]);
  return x;
}

void center(Vector& v) { v.array() -= v.mean(); }

// PD over the subsample with `fixed` columns taken from row i, evaluated at
// every row i; returned mean-centered.
Vector partial_dependence(const Predictor& pred, const Matrix& x, std::span<const Index> fixed) {
  const Index s = x.rows();
  Vector pd(s);
  parallel_for(static_cast<std::size_t>(s), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    Matrix z = x;
    for (Index c : fixed) z.col(c).setConstant(x(i, c));
    pd(i) = pred.predict(z).mean();
  });
  center(pd);
  return pd;
}

std::vector<Index> all_but(Index p, Index j) {
  std::vector<Index> out;
  for (Index c = 0; c < p; ++c) {
    if (c != j) out.push_back(c);
  }
  return out;
}

InteractionResult ratio(std::vector<std::string> names, const Vector& joint, const Vector& residual) {
  InteractionResult r;
  r.features = std::move(names);
  r.denominator = joint.squaredNorm();
  if (!(r.denominator > 1e-24 * static_cast<double>(joint.size()))) {
    r.degenerate = true;
    r.h_squared = 0.0;
    return r;
  }
  r.h_squared = residual.squaredNorm() / r.denominator;
  return r;
}

void check_feature(const Dataset& data, Index j) {
  if (j < 0 || j >= data.p()) throw Error("feature index out of range");
}

}  // namespace

InteractionResult h_pairwise(const Predictor& pred, const Dataset& data, Index j, Index k,
                             Index max_rows, RngSeed seed) {
  check_feature(data, j);
  check_feature(data, k);
  if (j == k) throw Error("h_pairwise needs two distinct features");
  const Index a = std::min(j, k);
  const Index b = std::max(j, k);
  const Matrix x = subsample_rows(data, max_rows, seed);
  const Vector pd_a = partial_dependence(pred, x, std::span(&a, 1));
  const Vector pd_b = partial_dependence(pred, x, std::span(&b, 1));
  const std::array<Index, 2> both{a, b};
  const Vector pd_ab = partial_dependence(pred, x, both);
  return ratio({data.feature_name(a), data.feature_name(b)}, pd_ab, pd_ab - pd_a - pd_b);
}

std::vector<InteractionResult> h_pairwise_all(const Predictor& pred, const Dataset& data,
                                              Index max_rows, RngSeed seed) {
  const Matrix x = subsample_rows(data, max_rows, seed);
  const Index p = data.p();
  std::vector<Vector> pd(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) pd[static_cast<std::size_t>(j)] = partial_dependence(pred, x, std::span(&j, 1));
  std::vector<InteractionResult> out;
  for (Index a = 0; a < p; ++a) {
    for (Index b = a + 1; b < p; ++b) {
      const std::array<Index, 2> both{a, b};
      const Vector pd_ab = partial_dependence(pred, x, both);
      out.push_back(ratio({data.feature_name(a), data.feature_name(b)}, pd_ab,
                          pd_ab - pd[static_cast<std::size_t>(a)] - pd[static_cast<std::size_t>(b)]));
    }
  }
  return out;
}

InteractionResult h_total(const Predictor& pred, const Dataset& data, Index j, Index max_rows,
                          RngSeed seed) {
  check_feature(data, j);
  if (data.p() < 2) throw Error("h_total needs at least two features");
  const Matrix x = subsample_rows(data, max_rows, seed);
  Vector f = pred.predict(x);
  center(f);
  const Vector pd_j = partial_dependence(pred, x, std::span(&j, 1));
  const auto rest = all_but(data.p(), j);
  const Vector pd_rest = partial_dependence(pred, x, rest);
  return ratio({data.feature_name(j)}, f, f - pd_j - pd_rest);
}

std::vector<double> dice_screen(const Predictor& pred, const Dataset& data, const Grid& grid) {
  return derivative_ice(ice(pred, data, grid)).second;
}

void write_pairwise_csv(const std::vector<InteractionResult>& results,
                        const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "feature_a,feature_b,h_squared\n";
  for (const auto& r : results) {
    if (r.features.size() != 2) throw Error("pairwise CSV needs two-feature results");
    out << r.features[0] << ',' << r.features[1] << ',' << detail::fmt(r.h_squared) << '\n';
  }
}

void write_total_csv(const std::vector<InteractionResult>& results, const std::filesystem::path& path) {
  auto out = detail::open_csv(path);
  out << "feature,h_squared\n";
  for (const auto& r : results) {
    if (r.features.size() != 1) throw Error("total CSV needs one-feature results");
    out << r.features[0] << ',' << detail::fmt(r.h_squared) << '\n';
  }
}

}  // namespace iml
