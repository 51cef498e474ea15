#include "iml/dgp.hpp"

#include <cmath>
#include <numbers>

namespace iml {
namespace {

using FeatureSampler = std::function<void(Rng&, std::span<double>)>;

// Rows are drawn one at a time: features, then additive Gaussian noise.
DgpSpec additive_noise_dgp(std::string id, Index p, FeatureSampler features, DgpTruth truth,
                           std::string note = {}) {
  DgpSpec spec;
  spec.id = std::move(id);
  spec.p = p;
  spec.truth = std::move(truth);
  spec.note = std::move(note);
  spec.sampler = [p, features = std::move(features), mean = spec.truth.mean,
                  sd = std::sqrt(spec.truth.noise_variance)](Index n, RngSeed seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Matrix x(n, p);
    Vector y(n);
    std::vector<double> row(static_cast<std::size_t>(p));
    for (Index i = 0; i < n; ++i) {
      features(rng, row);
      for (Index j = 0; j < p; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
      y(i) = mean(row) + sd * noise(rng);
    }
    return Dataset(std::move(x), std::move(y));
  };
  return spec;
}

FeatureSampler iid_uniform(double lo, double hi) {
  return [lo, hi](Rng& rng, std::span<double> row) {
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : row) v = u(rng);
  };
}

FeatureSampler iid_normal() {
  return [](Rng& rng, std::span<double> row) {
    std::normal_distribution<double> z(0.0, 1.0);
    for (auto& v : row) v = z(rng);
  };
}

std::vector<bool> flags(Index p, std::initializer_list<Index> on) {
  std::vector<bool> out(static_cast<std::size_t>(p), false);
  for (Index j : on) out[static_cast<std::size_t>(j)] = true;
  return out;
}

DgpSpec fig2_noise() {
  static constexpr Index p = 20;
  DgpSpec spec;
  spec.id = "fig2_noise";
  spec.p = p;
  spec.truth.mean = [](std::span<const double>) { return 0.5; };
  spec.truth.noise_variance = 1.0 / 12.0;
  spec.truth.relevant = flags(p, {});
  spec.sampler = [](Index n, RngSeed seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix x(n, p);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) x(i, j) = u(rng);
      y(i) = u(rng);
    }
    return Dataset(std::move(x), std::move(y));
  };
  return spec;
}

DgpSpec fig3_interaction() {
  DgpTruth truth;
  truth.mean = [](std::span<const double> x) { return x[0] * x[0] + x[1] - 5.0 * x[0] * x[1]; };
  truth.noise_variance = 5.0;
  truth.relevant = flags(3, {0, 1});
  truth.interactions = {{0, 1}};
  return additive_noise_dgp("fig3_interaction", 3, iid_uniform(-1.0, 1.0), std::move(truth),
                            "features drawn from U[-1,1] (range chosen by the toolkit)");
}

DgpSpec fig5_masked() {
  DgpTruth truth;
  truth.mean = [](std::span<const double> x) {
    return 3.0 * x[0] - 6.0 * x[1] + (x[2] >= 0.0 ? 12.0 * x[1] : 0.0);
  };
  truth.noise_variance = 0.3;
  truth.relevant = flags(3, {0, 1, 2});
  truth.interactions = {{1, 2}};
  return additive_noise_dgp("fig5_masked", 3, iid_uniform(-1.0, 1.0), std::move(truth));
}

DgpSpec fig6_flat() {
  static constexpr Index p = 10;
  DgpTruth truth;
  truth.mean = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 1; j < x.size(); ++j) s += x[j];
    return s;
  };
  truth.noise_variance = 0.9;
  truth.relevant = flags(p, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  return additive_noise_dgp("fig6_flat", p, iid_uniform(0.0, 1.0), std::move(truth));
}

DgpSpec fig8_mcp(Index p) {
  if (p < 2) throw Error("fig8_mcp needs p >= 2");
  DgpTruth truth;
  truth.mean = [](std::span<const double> x) { return 2.0 * x[0] + 2.0 * x[1] * x[1]; };
  truth.noise_variance = 1.0;
  truth.relevant = flags(p, {0, 1});
  return additive_noise_dgp("fig8_mcp", p, iid_normal(), std::move(truth));
}

DgpSpec ring_dependence() {
  DgpTruth truth;
  truth.mean = [](std::span<const double>) { return 0.0; };
  truth.noise_variance = 1.0;
  truth.relevant = flags(2, {});
  FeatureSampler ring = [](Rng& rng, std::span<double> row) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> radius(1.0, 0.1);
    const double theta = angle(rng);
    const double r = radius(rng);
    row[0] = r * std::cos(theta);
    row[1] = r * std::sin(theta);
  };
  return additive_noise_dgp("ring_dependence", 2, std::move(ring), std::move(truth),
                            "synthetic ring: dependent features with zero linear correlation; "
                            "target is independent noise");
}

DgpSpec correlated_gaussian() {
  constexpr double rho = 0.95;
  DgpTruth truth;
  truth.mean = [](std::span<const double> x) { return x[0] + x[1]; };
  truth.noise_variance = 1.0;
  truth.relevant = flags(2, {0, 1});
  FeatureSampler pair = [](Rng& rng, std::span<double> row) {
    std::normal_distribution<double> z(0.0, 1.0);
    const double a = z(rng);
    const double b = z(rng);
    row[0] = a;
    row[1] = rho * a + std::sqrt(1.0 - rho * rho) * b;
  };
  return additive_noise_dgp("correlated_gaussian", 2, std::move(pair), std::move(truth),
                            "bivariate standard Gaussian with correlation 0.95");
}

DgpSpec linear_independent() {
  DgpTruth truth;
  truth.mean = [](std::span<const double> x) { return x[0] + 2.0 * x[1] - x[2]; };
  truth.noise_variance = 0.01;
  truth.relevant = flags(3, {0, 1, 2});
  return additive_noise_dgp("linear_independent", 3, iid_uniform(0.0, 1.0), std::move(truth));
}

DgpSpec additive_smooth() {
  DgpTruth truth;
  truth.mean = [](std::span<const double> x) {
    return std::sin(std::numbers::pi * x[0]) + x[1] * x[1] + x[2];
  };
  truth.noise_variance = 0.01;
  truth.relevant = flags(3, {0, 1, 2});
  return additive_noise_dgp("additive_smooth", 3, iid_uniform(-1.0, 1.0), std::move(truth));
}

DgpSpec scm_dgp(std::string id, Scm scm) {
  const auto order = scm.topological_order();
  Index target = -1;
  for (std::size_t v = 0; v < scm.variables.size(); ++v) {
    if (scm.variables[v] == scm.target) target = static_cast<Index>(v);
  }
  // Feature column of each non-target variable.
  std::vector<Index> column(scm.variables.size(), -1);
  Index p = 0;
  for (std::size_t v = 0; v < scm.variables.size(); ++v) {
    if (static_cast<Index>(v) != target) column[v] = p++;
  }
  DgpSpec spec;
  spec.id = std::move(id);
  spec.p = p;
  const auto& tp = scm.parents[static_cast<std::size_t>(target)];
  const auto& tc = scm.coefficients[static_cast<std::size_t>(target)];
  std::vector<std::pair<Index, double>> terms;
  spec.truth.relevant.assign(static_cast<std::size_t>(p), false);
  for (std::size_t k = 0; k < tp.size(); ++k) {
    const Index col = column[static_cast<std::size_t>(tp[k])];
    terms.emplace_back(col, tc[k]);
    spec.truth.relevant[static_cast<std::size_t>(col)] = true;
  }
  spec.truth.mean = [terms](std::span<const double> x) {
    double s = 0.0;
    for (auto [col, c] : terms) s += c * x[static_cast<std::size_t>(col)];
    return s;
  };
  const double sd = scm.noise_sd[static_cast<std::size_t>(target)];
  spec.truth.noise_variance = sd * sd;
  spec.note = "relevance marks direct causes of the target";
  spec.sampler = [scm = std::move(scm)](Index n, RngSeed seed) { return sample_scm(scm, n, seed); };
  return spec;
}

}  // namespace

std::vector<Index> Scm::topological_order() const {
  const std::size_t m = variables.size();
  std::vector<int> state(m, 0);  // 0 new, 1 on stack, 2 done
  std::vector<Index> order;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    if (state[v] == 2) return;
    if (state[v] == 1) throw Error("SCM graph has a cycle through '" + variables[v] + "'");
    state[v] = 1;
    for (Index u : parents[v]) visit(static_cast<std::size_t>(u));
    state[v] = 2;
    order.push_back(static_cast<Index>(v));
  };
  for (std::size_t v = 0; v < m; ++v) visit(v);
  return order;
}

void Scm::validate() const {
  const std::size_t m = variables.size();
  if (m < 2) throw Error("SCM needs at least two variables");
  if (parents.size() != m || coefficients.size() != m || noise_sd.size() != m) {
    throw Error("SCM parent, coefficient and noise lists must match the variable list");
  }
  bool has_target = false;
  for (std::size_t v = 0; v < m; ++v) {
    if (parents[v].size() != coefficients[v].size()) throw Error("SCM coefficient count mismatch");
    for (Index u : parents[v]) {
      if (u < 0 || static_cast<std::size_t>(u) >= m) throw Error("SCM parent index out of range");
    }
    if (noise_sd[v] < 0.0) throw Error("SCM noise sd must be nonnegative");
    has_target = has_target || variables[v] == target;
  }
  if (!has_target) throw Error("SCM target '" + target + "' is not a variable");
  topological_order();
}

Scm chain_scm() {
  Scm scm;
  scm.variables = {"X1", "X2", "X3", "Y"};
  scm.parents = {{}, {0}, {1}, {2}};
  scm.coefficients = {{}, {1.0}, {1.0}, {1.0}};
  scm.noise_sd = {1.0, 1.0, 1.0, 1.0};
  scm.target = "Y";
  return scm;
}

Scm collider_scm() {
  Scm scm;
  scm.variables = {"X1", "X2", "X3", "X4", "X5", "Y"};
  // Y = X1 + X2 + e; X2 = X1 + e; X4 = Y + X3 + e; X5 = Y + e.
  scm.parents = {{}, {0}, {}, {5, 2}, {5}, {0, 1}};
  scm.coefficients = {{}, {1.0}, {}, {1.0, 1.0}, {1.0}, {1.0, 1.0}};
  scm.noise_sd = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  scm.target = "Y";
  return scm;
}

Dataset sample_scm(const Scm& scm, Index n, RngSeed seed) {
  scm.validate();
  if (n < 1) throw Error("sample size must be positive");
  const auto order = scm.topological_order();
  const std::size_t m = scm.variables.size();
  Matrix values(n, static_cast<Index>(m));
  auto rng = make_rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    for (Index v : order) {
      const auto vi = static_cast<std::size_t>(v);
      double s = scm.noise_sd[vi] * z(rng);
      for (std::size_t k = 0; k < scm.parents[vi].size(); ++k) {
        s += scm.coefficients[vi][k] * values(i, scm.parents[vi][k]);
      }
      values(i, v) = s;
    }
  }
  Matrix x(n, static_cast<Index>(m - 1));
  Vector y(n);
  std::vector<std::string> names;
  Index col = 0;
  for (std::size_t v = 0; v < m; ++v) {
    if (scm.variables[v] == scm.target) {
      y = values.col(static_cast<Index>(v));
    } else {
      x.col(col++) = values.col(static_cast<Index>(v));
      names.push_back(scm.variables[v]);
    }
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

DgpSpec find_dgp(std::string_view id, Index p) {
  if (id == "fig2_noise") return fig2_noise();
  if (id == "fig3_interaction") return fig3_interaction();
  if (id == "fig5_masked") return fig5_masked();
  if (id == "fig6_flat") return fig6_flat();
  if (id == "fig8_mcp") return fig8_mcp(p > 0 ? p : 10);
  if (id == "ring_dependence") return ring_dependence();
  if (id == "chain_scm") return scm_dgp("chain_scm", chain_scm());
  if (id == "collider_scm") return scm_dgp("collider_scm", collider_scm());
  if (id == "correlated_gaussian") return correlated_gaussian();
  if (id == "linear_independent") return linear_independent();
  if (id == "additive_smooth") return additive_smooth();
  throw Error("unknown data-generating process '" + std::string(id) + "'");
}

std::vector<std::string> registered_dgps() {
  return {"fig2_noise",  "fig3_interaction",    "fig5_masked",        "fig6_flat",
          "fig8_mcp",    "ring_dependence",     "chain_scm",          "collider_scm",
          "correlated_gaussian", "linear_independent", "additive_smooth"};
}

Dataset sample(const DgpSpec& spec, Index n, RngSeed seed) {
  if (n < 1) throw Error("sample size must be positive");
  if (!spec.sampler) throw Error("DGP '" + spec.id + "' has no sampler");
  return spec.sampler(n, seed);
}

Vector truth_mean(const DgpSpec& spec, const Matrix& x) {
  if (x.cols() != spec.p) throw Error("feature count does not match DGP '" + spec.id + "'");
  Vector out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    out(i) = spec.truth.mean(row);
  }
  return out;
}

}  // namespace iml
