#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "iml/core.hpp"

namespace iml {

// Friedman-Popescu H statistic, reported as H^2.
struct InteractionResult {
  std::vector<std::string> features;  // one name (total) or two (pairwise)
  double h_squared = 0.0;
  double denominator = 0.0;  // sum of squared centered joint effects
  bool degenerate = false;   // zero denominator; h_squared forced to 0
};

inline constexpr Index kDefaultInteractionRows = 300;

// Partial dependence functions are evaluated at (and averaged over) a seeded
// subsample of at most `max_rows` observed rows.
//   H^2_jk = sum_i [PD_jk(x_i) - PD_j(x_i) - PD_k(x_i)]^2 / sum_i PD_jk(x_i)^2
// with every PD mean-centered over the subsample.
InteractionResult h_pairwise(const Predictor& pred, const Dataset& data, Index j, Index k,
                             Index max_rows = kDefaultInteractionRows, RngSeed seed = {});

//   H^2_j = sum_i [f(x_i) - PD_j(x_i) - PD_-j(x_i)]^2 / sum_i f(x_i)^2
InteractionResult h_total(const Predictor& pred, const Dataset& data, Index j,
                          Index max_rows = kDefaultInteractionRows, RngSeed seed = {});

// All pairs j < k, sharing the univariate PD evaluations.
std::vector<InteractionResult> h_pairwise_all(const Predictor& pred, const Dataset& data,
                                              Index max_rows = kDefaultInteractionRows,
                                              RngSeed seed = {});

// Derivative-ICE standard deviation profile over `grid`.
std::vector<double> dice_screen(const Predictor& pred, const Dataset& data, const Grid& grid);

void write_pairwise_csv(const std::vector<InteractionResult>& results,
                        const std::filesystem::path& path);
void write_total_csv(const std::vector<InteractionResult>& results, const std::filesystem::path& path);

}  // namespace iml
