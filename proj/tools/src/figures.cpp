#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "app.hpp"
#include "iml/dependence.hpp"
#include "iml/dgp.hpp"
#include "iml/effects.hpp"
#include "iml/importance.hpp"
#include "iml/inference.hpp"
#include "iml/interactions.hpp"
#include "iml/learners.hpp"
#include "iml/parallel.hpp"

namespace iml::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int scale(const Config& config, std::string_view key, int fallback) {
  const long long v = config.get_int(key, fallback);
  if (v < 1) config.fail(key, "must be positive");
  return static_cast<int>(v);
}

double fraction(int hits, int total) { return total > 0 ? static_cast<double>(hits) / total : 0.0; }

// Least-squares slope of y on x.
double slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

Predictor chain_model() {
  return Predictor([](const Matrix& x) -> Vector { return 0.5 * x.col(1) + 0.5 * x.col(2); });
}

// ---------------------------------------------------------------------------

void fig2(RunContext& ctx) {
  const int seeds = scale(ctx.config, "reproduce.seeds", 20);
  const RngSeed base{ctx.seed};
  const DgpSpec dgp = find_dgp("fig2_noise");
  const Loss loss;
  const int features = static_cast<int>(dgp.p);
  auto seeds_csv = open_csv(ctx.outputs.file("fig2_seeds.csv"),
                            "seed,features_covering_zero,max_half_width,shap_sum,ratio,seconds");
  int passing = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_seconds = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const auto start = Clock::now();
    const Dataset train = sample(dgp, 100, derive_seed(base, s, 0));
    const Dataset test = sample(dgp, 10000, derive_seed(base, s, 1));
    const FittedModel model = fit(forest_spec(100), train, derive_seed(base, s, 2));
    const Predictor pred = model.predictor();
    const ImportanceResult imp = pfi_ci(pred, test, loss, kMinCiRepeats, derive_seed(base, s, 3));
    const Dataset background = background_sample(train, derive_seed(base, s, 4), 50);
    const Dataset explained = background_sample(test, derive_seed(base, s, 5), 20);
    const ImportanceResult shap = shap_importance(pred, background, explained, 200, derive_seed(base, s, 6));

    int covering = 0;
    double half_width = 0.0;
    for (std::size_t j = 0; j < imp.size(); ++j) {
      covering += imp.band_contains(j, 0.0) ? 1 : 0;
      half_width = std::max(half_width, imp.half_width(j));
    }
    const double shap_sum = std::accumulate(shap.scores.begin(), shap.scores.end(), 0.0);
    const double ratio = half_width > 0.0 ? shap_sum / half_width : std::numeric_limits<double>::infinity();
    const double secs = seconds_since(start);
    if (covering >= features - 2 && ratio > 5.0) ++passing;
    min_ratio = std::min(min_ratio, ratio);
    max_seconds = std::max(max_seconds, secs);
    seeds_csv << s << ',' << covering << ',' << half_width << ',' << shap_sum << ',' << ratio << ','
              << secs << '\n';
    if (s == 0) {
      write_importance_csv(imp, ctx.outputs.file("fig2_pfi.csv"));
      write_importance_csv(shap, ctx.outputs.file("fig2_shap.csv"));
    }
  }
  auto& m = ctx.report.metrics();
  m["seeds"] = seeds;
  m["seeds_passing"] = passing;
  ctx.report.check("fig2.seed_fraction_pfi_band_covers_zero_and_shap_dominates", fraction(passing, seeds), ">=",
                   0.9);
  ctx.report.check("fig2.min_shap_sum_to_pfi_half_width", min_ratio, ">", 5.0);
  ctx.report.check("fig2.max_seconds_per_seed", max_seconds, "<=", 120.0);
}

void fig3(RunContext& ctx) {
  const RngSeed base{ctx.seed};
  const DgpSpec dgp = find_dgp("fig3_interaction");
  const Dataset data = sample(dgp, 1000, derive_seed(base, 0));
  auto [train, test] = train_test_split(data, 0.3, derive_seed(base, 1));
  const Loss loss;
  const std::vector<std::pair<std::string, LearnerSpec>> learners = {
      {"ols_linear", ols_spec()}, {"kernel_ridge_rbf", kernel_ridge_spec(1.0)}, {"random_forest", forest_spec(100)}};
  const Grid grid = build_grid(test, 0, GridStrategy::quantile, kDefaultGridSize);

  std::map<std::string, std::pair<double, double>> losses;
  std::map<std::string, std::vector<double>> curves;
  auto loss_csv = open_csv(ctx.outputs.file("fig3_losses.csv"), "learner,train_loss,test_loss");
  for (std::size_t l = 0; l < learners.size(); ++l) {
    const auto& [name, spec] = learners[l];
    const FittedModel model = fit(spec, train, derive_seed(base, 2, l));
    const Predictor pred = model.predictor();
    losses[name] = {evaluate(pred, train, loss), evaluate(pred, test, loss)};
    curves[name] = pdp(pred, test, grid).values;
    loss_csv << name << ',' << losses[name].first << ',' << losses[name].second << '\n';
  }
  curves["oracle"] = pdp(oracle_predictor("fig3_interaction"), test, grid).values;

  auto pdp_csv = open_csv(ctx.outputs.file("fig3_pdp.csv"), "grid,ols_linear,kernel_ridge_rbf,random_forest,oracle");
  double sq = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    pdp_csv << grid.values[g] << ',' << curves["ols_linear"][g] << ',' << curves["kernel_ridge_rbf"][g] << ','
            << curves["random_forest"][g] << ',' << curves["oracle"][g] << '\n';
    const double d = curves["kernel_ridge_rbf"][g] - curves["oracle"][g];
    sq += d * d;
  }
  const double rmse = std::sqrt(sq / static_cast<double>(grid.size()));

  // Residual of the ols PDP from its own least-squares line.
  const auto& ols_curve = curves["ols_linear"];
  const double b = slope(grid.values, ols_curve);
  const double a = mean(ols_curve) - b * mean(grid.values);
  double affine_residual = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    affine_residual = std::max(affine_residual, std::abs(ols_curve[g] - (a + b * grid.values[g])));
  }

  const double krr = losses["kernel_ridge_rbf"].second;
  auto& r = ctx.report;
  r.metrics()["pdp_rmse_kernel_ridge_vs_oracle"] = rmse;
  r.metrics()["ols_pdp_affine_residual"] = affine_residual;
  r.check("fig3.kernel_ridge_minus_ols_test_loss", krr - losses["ols_linear"].second, "<", 0.0);
  r.check("fig3.kernel_ridge_minus_forest_test_loss", krr - losses["random_forest"].second, "<", 0.0);
  r.check("fig3.forest_train_to_test_loss", losses["random_forest"].first / losses["random_forest"].second, "<",
          0.5);
  r.check("fig3.kernel_ridge_pdp_rmse_x1", rmse, "<=", 0.5);
  r.check("fig3.ols_pdp_affine_residual", affine_residual, "<=", 1e-8);
}

void fig4_cond(RunContext& ctx) {
  const int seeds = scale(ctx.config, "reproduce.seeds", 20);
  const RngSeed base{ctx.seed};
  const Predictor model = chain_model();
  const Loss loss;
  auto seeds_csv = open_csv(ctx.outputs.file("fig4_seeds.csv"),
                            "seed,pfi_x2_q05,pfi_x3_q05,cfi_x2_q05,cfi_x2_q95,cfi_x3_q05,sage_x1,sage_x2,sage_x3,pass");
  int passing = 0;
  for (int s = 0; s < seeds; ++s) {
    const Dataset data = sample_scm(chain_scm(), 2000, derive_seed(base, s, 0));
    const ImportanceResult marginal = pfi(model, data, loss, kMinCiRepeats, derive_seed(base, s, 1));
    const int leaves = default_max_leaves(data.n());
    const auto sampler2 = fit_conditional_sampler(data, 1, leaves, derive_seed(base, s, 2));
    const auto sampler3 = fit_conditional_sampler(data, 2, leaves, derive_seed(base, s, 3));
    const ImportanceResult c2 = cfi(model, data, loss, sampler2, kMinCiRepeats, derive_seed(base, s, 4));
    const ImportanceResult c3 = cfi(model, data, loss, sampler3, kMinCiRepeats, derive_seed(base, s, 5));
    SageOptions options;
    options.n_orderings = 256;
    options.imputation_samples = 8;
    const ImportanceResult sg = sage(model, data, loss, SageMode::conditional, options, derive_seed(base, s, 6));

    const bool pass = marginal.q05[1] > 0.0 && marginal.q05[2] > 0.0 && c2.band_contains(0, 0.0) &&
                      c3.q05[0] > 0.0 && sg.scores[0] > 0.0 && sg.scores[1] > 0.0 && sg.scores[2] > 0.0;
    passing += pass ? 1 : 0;
    seeds_csv << s << ',' << marginal.q05[1] << ',' << marginal.q05[2] << ',' << c2.q05[0] << ',' << c2.q95[0] << ','
              << c3.q05[0] << ',' << sg.scores[0] << ',' << sg.scores[1] << ',' << sg.scores[2] << ','
              << (pass ? 1 : 0) << '\n';
    if (s == 0) {
      auto imp = open_csv(ctx.outputs.file("fig4_importance.csv"), "method,feature,score,q05,q95");
      for (std::size_t j = 0; j < marginal.size(); ++j) {
        imp << "pfi," << marginal.names[j] << ',' << marginal.scores[j] << ',' << marginal.q05[j] << ','
            << marginal.q95[j] << '\n';
      }
      for (const auto* c : {&c2, &c3}) {
        imp << "cfi," << c->names[0] << ',' << c->scores[0] << ',' << c->q05[0] << ',' << c->q95[0] << '\n';
      }
      for (std::size_t j = 0; j < sg.size(); ++j) {
        imp << "sage_conditional," << sg.names[j] << ',' << sg.scores[j] << ',' << sg.q05[j] << ',' << sg.q95[j]
            << '\n';
      }
    }
  }
  ctx.report.metrics()["seeds"] = seeds;
  ctx.report.metrics()["seeds_passing"] = passing;
  ctx.report.check("fig4.seed_fraction_with_pattern", fraction(passing, seeds), ">=", 0.9);
}

void fig5(RunContext& ctx) {
  const RngSeed base{ctx.seed};
  const Dataset data = sample(find_dgp("fig5_masked"), 1000, derive_seed(base, 0));
  LearnerSpec spec = forest_spec(200, 0, 1);
  spec.min_leaf = 5;
  const FittedModel model = fit(spec, data, derive_seed(base, 1));
  const Predictor pred = model.predictor();
  const Dataset rows = background_sample(data, derive_seed(base, 3), 200);

  const auto h12 = h_pairwise(pred, data, 0, 1, kDefaultInteractionRows, derive_seed(base, 2));
  const auto h13 = h_pairwise(pred, data, 0, 2, kDefaultInteractionRows, derive_seed(base, 2));
  const auto h23 = h_pairwise(pred, data, 1, 2, kDefaultInteractionRows, derive_seed(base, 2));
  write_pairwise_csv({h12, h13, h23}, ctx.outputs.file("fig5_h_pairwise.csv"));

  const Grid g1 = build_grid(rows, 0);
  const Grid g2 = build_grid(rows, 1);
  const Grid g3 = build_grid(rows, 2);
  const auto d1 = dice_screen(pred, rows, g1);
  const auto d2 = dice_screen(pred, rows, g2);
  {
    auto out = open_csv(ctx.outputs.file("fig5_dice_std.csv"), "feature,grid,std");
    for (std::size_t g = 0; g < d1.size(); ++g) out << "X1," << g1.values[g] << ',' << d1[g] << '\n';
    for (std::size_t g = 0; g < d2.size(); ++g) out << "X2," << g2.values[g] << ',' << d2[g] << '\n';
  }
  const EffectCurve ice2 = ice(pred, rows, g2);
  write_curve_csv(ice2, ctx.outputs.file("fig5_pdp.csv"));
  write_curve_csv(ice2, ctx.outputs.file("fig5_ice.csv"), true);

  const Effect2D surface = pdp_2d(pred, rows, g2, g3);
  write_surface_csv(surface, ctx.outputs.file("fig5_pdp_2d.csv"));
  std::vector<double> neg;
  std::vector<double> pos;
  for (std::size_t b = 0; b < g3.size(); ++b) {
    std::vector<double> column(g2.size());
    for (std::size_t a = 0; a < g2.size(); ++a) column[a] = surface.values(static_cast<Index>(a), static_cast<Index>(b));
    (g3.values[b] < 0.0 ? neg : pos).push_back(slope(g2.values, column));
  }
  const double slope_neg = neg.empty() ? 0.0 : mean(neg);
  const double slope_pos = pos.empty() ? 0.0 : mean(pos);

  const double max1 = *std::max_element(d1.begin(), d1.end());
  const double max2 = *std::max_element(d2.begin(), d2.end());
  const double other = std::max(h12.h_squared, h13.h_squared);
  auto& r = ctx.report;
  r.metrics()["h_squared"] = {{"X1:X2", h12.h_squared}, {"X1:X3", h13.h_squared}, {"X2:X3", h23.h_squared}};
  r.metrics()["dice_std_max"] = {{"X1", max1}, {"X2", max2}};
  r.metrics()["pdp_2d_x2_slope"] = {{"x3_negative", slope_neg}, {"x3_nonnegative", slope_pos}};
  r.check("fig5.h_squared_x2_x3", h23.h_squared, ">=", 0.3);
  r.check("fig5.h_squared_x2_x3_over_max_other", other > 0.0 ? h23.h_squared / other : 1e300, ">=", 3.0);
  r.check("fig5.dice_std_max_x2_over_x1", max1 > 0.0 ? max2 / max1 : 1e300, ">=", 5.0);
  r.check("fig5.pdp_2d_x2_slope_product", slope_neg * slope_pos, "<", 0.0);
}

void fig6(RunContext& ctx) {
  const int seeds = scale(ctx.config, "reproduce.seeds", 10);
  const RngSeed base{ctx.seed};
  const DgpSpec dgp = find_dgp("fig6_flat");
  const int replicates = 10;
  auto seeds_csv = open_csv(ctx.outputs.file("fig6_seeds.csv"),
                            "seed,estimation_width,refit_width,refit_coverage_of_truth");
  std::vector<double> est_widths;
  std::vector<double> refit_widths;
  double min_coverage = 1.0;
  for (int s = 0; s < seeds; ++s) {
    const Dataset data = sample(dgp, 100, derive_seed(base, s, 0));
    const LearnerSpec spec = forest_spec(100);
    const FittedModel model = fit(spec, data, derive_seed(base, s, 1));
    const Grid grid = build_grid(data, 0, GridStrategy::equidistant, kDefaultGridSize);
    const auto est = centered(
        pdp_band_estimation(model.predictor(), data, grid, replicates, data.n() / 2, derive_seed(base, s, 2)));
    const auto ref = centered(pdp_band_refit(spec, dgp, grid, replicates, 100, derive_seed(base, s, 3)));
    const std::vector<double> truth(grid.size(), 0.0);
    const double coverage = ref.coverage(truth);
    est_widths.push_back(est.mean_width());
    refit_widths.push_back(ref.mean_width());
    min_coverage = std::min(min_coverage, coverage);
    seeds_csv << s << ',' << est.mean_width() << ',' << ref.mean_width() << ',' << coverage << '\n';
    if (s == 0) {
      write_curve_csv(pdp(model.predictor(), data, grid), ctx.outputs.file("fig6_pdp.csv"));
      write_band_csv(est, ctx.outputs.file("fig6_band_estimation.csv"));
      write_band_csv(ref, ctx.outputs.file("fig6_band_refit.csv"));
    }
  }
  auto& r = ctx.report;
  r.metrics()["mean_estimation_width"] = mean(est_widths);
  r.metrics()["mean_refit_width"] = mean(refit_widths);
  r.check("fig6.refit_minus_estimation_mean_width", mean(refit_widths) - mean(est_widths), ">", 0.0);
  r.check("fig6.min_refit_coverage_of_flat_truth", min_coverage, ">=", 0.8);
}

// Fraction of runs in which at least one of `features` independent null
// features is declared significant by an uncorrected Pearson permutation test.
double global_null_rejection_rate(int runs, int features, Index n, int permutations, RngSeed base,
                                  std::ostream& csv) {
  std::vector<int> rejections(static_cast<std::size_t>(runs), 0);
  parallel_for(static_cast<std::size_t>(runs), [&](std::size_t r) {
    Rng rng = make_rng(derive_seed(base, r, 0));
    std::normal_distribution<double> normal;
    std::vector<double> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = normal(rng);
    int hits = 0;
    for (int j = 0; j < features; ++j) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = normal(rng);
      const double p =
          independence_test(x, y, DependenceStatistic::pearson, permutations, derive_seed(base, r, j + 1));
      hits += p < 0.05 ? 1 : 0;
    }
    rejections[r] = hits;
  });
  int any = 0;
  for (int r = 0; r < runs; ++r) {
    csv << r << ',' << rejections[static_cast<std::size_t>(r)] << '\n';
    any += rejections[static_cast<std::size_t>(r)] > 0 ? 1 : 0;
  }
  return fraction(any, runs);
}

void fig8(RunContext& ctx) {
  const auto start = Clock::now();
  const RngSeed base{ctx.seed};
  const int null_runs = scale(ctx.config, "reproduce.global_null_runs", 300);
  const int runs = scale(ctx.config, "reproduce.runs", 20);
  const std::vector<Index> dims = {10, 50, 100, 200};
  const double alpha = 0.05;

  auto null_csv = open_csv(ctx.outputs.file("fig8_global_null.csv"), "run,uncorrected_rejections");
  const double rate = global_null_rejection_rate(null_runs, 50, 100, 999, derive_seed(base, 0), null_csv);

  auto runs_csv = open_csv(ctx.outputs.file("fig8_runs.csv"),
                           "p,run,n_significant_uncorrected,n_significant_bonferroni,false_positives_uncorrected,"
                           "false_positives_bonferroni,p_x1,p_x2");
  std::vector<double> xs;
  std::vector<double> ys;
  int bonferroni_ok = 0;
  int signal_ok = 0;
  int total = 0;
  const Loss loss;
  PimpOptions options;
  options.n_target_permutations = 30;
  options.pfi_repeats = 1;
  auto summary = open_csv(ctx.outputs.file("fig8.csv"),
                          "p,n_significant_uncorrected,n_significant_bonferroni,false_positives_uncorrected,"
                          "false_positives_bonferroni");
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const Index p = dims[d];
    const DgpSpec dgp = find_dgp("fig8_mcp", p);
    double sum_unc = 0.0;
    double sum_bon = 0.0;
    double sum_fp_unc = 0.0;
    double sum_fp_bon = 0.0;
    for (int r = 0; r < runs; ++r) {
      const RngSeed run_seed = derive_seed(base, d + 1, static_cast<std::uint64_t>(r));
      const Dataset train = sample(dgp, 100, derive_seed(run_seed, 0));
      const Dataset test = sample(dgp, 100, derive_seed(run_seed, 1));
      const TestedImportance raw = pimp(forest_spec(50), train, test, loss, options, derive_seed(run_seed, 2));
      const TestedImportance unc = adjust_pvalues(raw, Correction::none, alpha);
      const TestedImportance bon = adjust_pvalues(raw, Correction::bonferroni, alpha);
      int fp_unc = 0;
      int fp_bon = 0;
      for (std::size_t j = 2; j < raw.names.size(); ++j) {
        fp_unc += unc.significant[j] ? 1 : 0;
        fp_bon += bon.significant[j] ? 1 : 0;
      }
      xs.push_back(static_cast<double>(p));
      ys.push_back(fp_unc);
      bonferroni_ok += fp_bon <= 1 ? 1 : 0;
      signal_ok += unc.significant[0] && unc.significant[1] ? 1 : 0;
      ++total;
      sum_unc += unc.n_significant();
      sum_bon += bon.n_significant();
      sum_fp_unc += fp_unc;
      sum_fp_bon += fp_bon;
      runs_csv << p << ',' << r << ',' << unc.n_significant() << ',' << bon.n_significant() << ',' << fp_unc << ','
               << fp_bon << ',' << raw.p_values_raw[0] << ',' << raw.p_values_raw[1] << '\n';
    }
    summary << p << ',' << sum_unc / runs << ',' << sum_bon / runs << ',' << sum_fp_unc / runs << ','
            << sum_fp_bon / runs << '\n';
  }
  const double fp_slope = slope(xs, ys);
  const double secs = seconds_since(start);
  auto& rep = ctx.report;
  rep.metrics()["global_null_rejection_rate"] = rate;
  rep.metrics()["global_null_reference"] = 1.0 - std::pow(0.95, 50);
  rep.metrics()["false_positive_slope"] = fp_slope;
  rep.metrics()["runs_per_p"] = runs;
  rep.check("fig8.global_null_rate_minus_0.923_abs", std::abs(rate - 0.923), "<=", 0.06);
  rep.check("fig8.false_positive_slope_minus_0.05_abs", std::abs(fp_slope - 0.05), "<=", 0.02);
  rep.check("fig8.run_fraction_bonferroni_at_most_one", fraction(bonferroni_ok, total), ">=", 0.95);
  rep.check("fig8.run_fraction_x1_x2_significant", fraction(signal_ok, total), ">=", 1.0);
  rep.check("fig8.seconds", secs, "<=", 900.0);
}

void assoc(RunContext& ctx) {
  const int seeds = scale(ctx.config, "reproduce.seeds", 20);
  const RngSeed base{ctx.seed};
  const DgpSpec dgp = find_dgp("ring_dependence");
  auto csv = open_csv(ctx.outputs.file("assoc_seeds.csv"), "seed,pearson,pearson_p,hsic,hsic_p");
  int pearson_ok = 0;
  int hsic_ok = 0;
  for (int s = 0; s < seeds; ++s) {
    const Dataset data = sample(dgp, 500, derive_seed(base, s, 0));
    if (s == 0) data.to_csv(ctx.outputs.file("assoc_data.csv"));
    const auto x1 = column_values(data.features(), 0);
    const auto x2 = column_values(data.features(), 1);
    const double pp = independence_test(x1, x2, DependenceStatistic::pearson, 500, derive_seed(base, s, 1));
    const double hp = independence_test(x1, x2, DependenceStatistic::hsic, 500, derive_seed(base, s, 2));
    pearson_ok += pp > 0.05 ? 1 : 0;
    hsic_ok += hp < 0.05 ? 1 : 0;
    csv << s << ',' << pearson(x1, x2) << ',' << pp << ',' << hsic(x1, x2).value << ',' << hp << '\n';
  }
  ctx.report.check("assoc.seed_fraction_pearson_not_significant", fraction(pearson_ok, seeds), ">=", 0.9);
  ctx.report.check("assoc.seed_fraction_hsic_significant", fraction(hsic_ok, seeds), ">=", 0.9);
}

void sampling(RunContext& ctx) {
  const RngSeed base{ctx.seed};
  const Dataset dependent = sample(find_dgp("correlated_gaussian"), 500, derive_seed(base, 0));
  const Dataset independent = sample(find_dgp("linear_independent"), 500, derive_seed(base, 1));
  auto scores = open_csv(ctx.outputs.file("sampling_scores.csv"), "data,strategy,score,threshold_distance");
  auto points = open_csv(ctx.outputs.file("sampling_points.csv"), "strategy,X1,X2");
  std::map<std::string, double> dep;
  std::map<std::string, double> ind;
  for (auto s : {Perturbation::equidistant, Perturbation::quantile, Perturbation::subsample, Perturbation::permutation}) {
    const std::string name(to_string(s));
    const Matrix pts = perturbation_points(dependent, 0, s, kDefaultGridSize, derive_seed(base, 2, static_cast<int>(s)));
    const auto r = extrapolation_score(dependent, pts);
    dep[name] = r.score;
    scores << "correlated_gaussian," << name << ',' << r.score << ',' << r.threshold_distance << '\n';
    const Index stride = std::max<Index>(1, pts.rows() / 500);
    for (Index i = 0; i < pts.rows(); i += stride) points << name << ',' << pts(i, 0) << ',' << pts(i, 1) << '\n';
    const auto ri = extrapolation_score(
        independent, perturbation_points(independent, 0, s, kDefaultGridSize, derive_seed(base, 3, static_cast<int>(s))));
    ind[name] = ri.score;
    scores << "linear_independent," << name << ',' << ri.score << ',' << ri.threshold_distance << '\n';
  }
  for (Index i = 0; i < dependent.n(); ++i) {
    points << "observed," << dependent.features()(i, 0) << ',' << dependent.features()(i, 1) << '\n';
  }
  ctx.report.check("sampling.equidistant_minus_quantile_score", dep["equidistant"] - dep["quantile"], ">=", 0.1);
  ctx.report.check("sampling.independent_subsample_score_minus_0.05_abs", std::abs(ind["subsample"] - 0.05), "<=",
                   0.05);
}

void scm8(RunContext& ctx) {
  const RngSeed base{ctx.seed};
  const Dataset data = sample_scm(collider_scm(), 10000, derive_seed(base, 0));
  const FittedModel model = fit(ols_spec(), data, derive_seed(base, 1));
  const Vector coef = *model.linear_coefficients();
  const double mse = evaluate(model.predictor(), data, Loss());
  const std::vector<double> y(data.target().begin(), data.target().end());
  const double tss = sample_variance(y) * static_cast<double>(y.size() - 1) / static_cast<double>(y.size());
  const double r2 = 1.0 - mse / tss;
  const std::vector<double> reference = {0.329, 0.323, -0.327, 0.342, 0.334};
  auto csv = open_csv(ctx.outputs.file("scm8_coefficients.csv"), "term,estimate,reference");
  double worst = 0.0;
  for (Index j = 0; j < data.p(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    csv << data.feature_name(j) << ',' << coef(j) << ',' << reference[ju] << '\n';
    worst = std::max(worst, std::abs(coef(j) - reference[ju]));
  }
  csv << "intercept," << *model.linear_intercept() << ",0\n";
  csv << "r_squared," << r2 << ",0.943\n";
  ctx.report.metrics()["r_squared"] = r2;
  ctx.report.check("scm8.max_abs_coefficient_deviation", worst, "<=", 0.05);
  ctx.report.check("scm8.r_squared_minus_0.943_abs", std::abs(r2 - 0.943), "<=", 0.02);
}

const std::vector<std::pair<std::string, std::function<void(RunContext&)>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<void(RunContext&)>>> figures = {
      {"fig2", fig2}, {"fig3", fig3},   {"fig4_cond", fig4_cond}, {"fig5", fig5}, {"fig6", fig6},
      {"fig8", fig8}, {"assoc", assoc}, {"sampling", sampling},   {"scm8", scm8}};
  return figures;
}

}  // namespace

std::vector<std::string> figure_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, fn] : registry()) ids.push_back(id);
  return ids;
}

void cmd_reproduce(RunContext& ctx, const std::string& figure) {
  for (const auto& [id, fn] : registry()) {
    if (id == figure) {
      ctx.report.metrics()["figure"] = figure;
      fn(ctx);
      return;
    }
  }
  throw ConfigError("command line", 0, "", "unknown figure '" + figure + "'");
}

}  // namespace iml::cli
