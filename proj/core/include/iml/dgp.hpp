#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iml/core.hpp"

namespace iml {

// Ground truth attached to a data-generating process.
struct DgpTruth {
  // Structural mean E[Y | X = x] for one feature row.
  std::function<double(std::span<const double>)> mean;
  double noise_variance = 0.0;
  std::vector<bool> relevant;                      // per feature
  std::vector<std::pair<Index, Index>> interactions;  // truly interacting pairs
};

struct DgpSpec {
  std::string id;
  Index p = 0;
  std::function<Dataset(Index n, RngSeed seed)> sampler;
  DgpTruth truth;
  // Toolkit choices that go beyond the published description of the process.
  std::string note;
};

// Registered processes:
//   fig2_noise, fig3_interaction, fig5_masked, fig6_flat, fig8_mcp (uses p),
//   ring_dependence, chain_scm, collider_scm, correlated_gaussian,
//   linear_independent, additive_smooth.
DgpSpec find_dgp(std::string_view id, Index p = 0);
std::vector<std::string> registered_dgps();

Dataset sample(const DgpSpec& spec, Index n, RngSeed seed);

// truth.mean applied to every row.
Vector truth_mean(const DgpSpec& spec, const Matrix& x);

// Linear Gaussian structural causal model. Each variable equals the weighted
// sum of its parents plus independent N(0, noise_sd^2) noise.
struct Scm {
  std::vector<std::string> variables;
  std::vector<std::vector<Index>> parents;        // per variable
  std::vector<std::vector<double>> coefficients;  // aligned with parents
  std::vector<double> noise_sd;
  std::string target;  // becomes the Dataset target; the rest are features

  // Variable indices in a topological order. Throws on cycles.
  std::vector<Index> topological_order() const;
  void validate() const;
};

// X1 -> X2 -> X3 -> Y with unit coefficients and unit noise.
Scm chain_scm();
// X1 -> Y, X1 -> X2, X2 -> Y, Y -> X4, Y -> X5, X3 -> X4; unit everything.
Scm collider_scm();

Dataset sample_scm(const Scm& scm, Index n, RngSeed seed);

}  // namespace iml
