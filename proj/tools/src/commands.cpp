#include <algorithm>
#include <fstream>

#include "app.hpp"
#include "experiment.hpp"
#include "iml/dependence.hpp"
#include "iml/effects.hpp"
#include "iml/importance.hpp"
#include "iml/inference.hpp"
#include "iml/interactions.hpp"

namespace iml::cli {
namespace {

Index positive_index(const Config& config, std::string_view key, long long fallback) {
  const long long v = config.get_int(key, fallback);
  if (v < 1) config.fail(key, "must be positive");
  return static_cast<Index>(v);
}

int positive_int(const Config& config, std::string_view key, int fallback) {
  return static_cast<int>(positive_index(config, key, fallback));
}

void record_seed(RunContext& ctx, const std::string& name, RngSeed seed) {
  ctx.report.derived_seeds()[name] = seed.value;
}

RngSeed method_seed(RunContext& ctx) {
  const RngSeed s = stream_seed(ctx.seed, Stream::method);
  record_seed(ctx, "method", s);
  return s;
}

Perturbation perturbation_of(GridStrategy g) {
  switch (g) {
    case GridStrategy::equidistant: return Perturbation::equidistant;
    case GridStrategy::quantile: return Perturbation::quantile;
    case GridStrategy::subsample: return Perturbation::subsample;
  }
  return Perturbation::quantile;
}

std::string method_name(const Config& config, std::string_view fallback,
                        std::initializer_list<std::string_view> allowed) {
  const std::string name = config.get_string("method.name", fallback);
  if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    config.fail("method.name", "unknown method '" + name + "' (expected one of: " + list + ")");
  }
  return name;
}

std::vector<FeatureGroup> groups_from_config(const Config& config, const Dataset& data) {
  std::vector<FeatureGroup> groups;
  for (const auto& [name, members] : config.with_prefix("groups.")) {
    FeatureGroup g{name, {}};
    std::size_t pos = 0;
    while (pos <= members.size()) {
      auto end = members.find(',', pos);
      if (end == std::string::npos) end = members.size();
      std::string item = members.substr(pos, end - pos);
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (item.empty()) config.fail("groups." + name, "empty feature name in group");
      try {
        g.features.push_back(data.feature_index(item));
      } catch (const Error&) {
        config.fail("groups." + name, "unknown feature '" + item + "'");
      }
      pos = end + 1;
    }
    groups.push_back(std::move(g));
  }
  if (groups.empty()) config.fail("method.name", "grouped_pfi needs at least one groups.<name> key");
  return groups;
}

AuditPlan base_plan(const std::string& method, PlanKind kind) {
  AuditPlan plan;
  plan.method = method;
  plan.kind = kind;
  return plan;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shared experiment plumbing

LearnerSpec learner_from_config(const Config& config) {
  const std::string kind = config.get_string("learner.kind", "random_forest");
  return with_config_keys(config, [&] {
    auto spec = LearnerSpec::from_params(kind, config.with_prefix("learner.params."));
    spec.validate();
    return spec;
  });
}

Loss loss_from_config(const Config& config) {
  try {
    return Loss::parse(config.get_string("method.loss", "squared_error"));
  } catch (const Error& e) {
    config.fail("method.loss", e.what());
  }
}

Index feature_from_config(const Config& config, const Dataset& data, std::string_view key) {
  const std::string name = config.require(key);
  try {
    return data.feature_index(name);
  } catch (const Error&) {
    config.fail(key, "unknown feature '" + name + "'");
  }
}

Grid grid_from_config(const Config& config, const Dataset& data, Index feature, RngSeed seed) {
  GridStrategy strategy = GridStrategy::quantile;
  try {
    strategy = parse_grid_strategy(config.get_string("method.grid", "quantile"));
  } catch (const Error& e) {
    config.fail("method.grid", e.what());
  }
  const int size = positive_int(config, "method.grid_size", kDefaultGridSize);
  if (size < 2) config.fail("method.grid_size", "needs at least 2 grid points");
  return build_grid(data, feature, strategy, size, seed);
}

AuditThresholds thresholds_from_config(const Config& config) {
  AuditThresholds t;
  t.p2_loss_ratio = config.get_double("audit.p2_loss_ratio", t.p2_loss_ratio);
  t.p3_relative_tolerance = config.get_double("audit.p3_relative_tolerance", t.p3_relative_tolerance);
  t.p4_extrapolation_score = config.get_double("audit.p4_extrapolation_score", t.p4_extrapolation_score);
  t.p5_alpha = config.get_double("audit.p5_alpha", t.p5_alpha);
  t.p5_max_abs_pearson = config.get_double("audit.p5_max_abs_pearson", t.p5_max_abs_pearson);
  t.p7_h_squared = config.get_double("audit.p7_h_squared", t.p7_h_squared);
  t.p8_min_replicates = static_cast<int>(config.get_int("audit.p8_min_replicates", t.p8_min_replicates));
  t.p9_high_dim_features = config.get_int("audit.p9_high_dim_features", t.p9_high_dim_features);
  t.dependence_rows = config.get_int("audit.dependence_rows", t.dependence_rows);
  t.dependence_permutations =
      static_cast<int>(config.get_int("audit.dependence_permutations", t.dependence_permutations));
  t.interaction_rows = config.get_int("audit.interaction_rows", t.interaction_rows);
  return t;
}

const Dataset& Experiment::eval(const Config& config, std::string_view default_split) const {
  const std::string split = config.get_string("method.eval", default_split);
  if (split == "train") return *train;
  if (split != "test") config.fail("method.eval", "expected train or test, got '" + split + "'");
  return test ? *test : *train;
}

Experiment prepare(RunContext& ctx, bool fit_model) {
  const Config& cfg = ctx.config;
  Experiment ex;
  const bool has_dgp = cfg.has("data.dgp");
  const bool has_path = cfg.has("data.path");
  if (has_dgp == has_path) {
    cfg.fail(has_dgp ? "data.path" : "data.dgp", "exactly one of data.dgp and data.path is required");
  }
  const double test_fraction = cfg.get_double("data.test_fraction", 0.3);
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    cfg.fail("data.test_fraction", "must lie in [0, 1)");
  }

  const RngSeed data_seed = stream_seed(ctx.seed, Stream::data);
  const RngSeed split_seed = stream_seed(ctx.seed, Stream::split);
  std::optional<Dataset> full;
  if (has_dgp) {
    const Index p = cfg.has("data.p") ? positive_index(cfg, "data.p", 0) : 0;
    try {
      ex.dgp = find_dgp(cfg.get_string("data.dgp", ""), p);
    } catch (const Error& e) {
      cfg.fail(cfg.has("data.p") && std::string(e.what()).find("p >=") != std::string::npos ? "data.p"
                                                                                          : "data.dgp",
               e.what());
    }
    const Index n = positive_index(cfg, "data.n", 1000);
    record_seed(ctx, "data", data_seed);
    if (cfg.has("data.test_n")) {
      const Index n_test = positive_index(cfg, "data.test_n", 0);
      const RngSeed test_seed = derive_seed(data_seed, 1);
      record_seed(ctx, "data_test", test_seed);
      ex.train = sample(*ex.dgp, n, data_seed);
      ex.test = sample(*ex.dgp, n_test, test_seed);
    } else {
      full = sample(*ex.dgp, n, data_seed);
    }
  } else {
    const std::string target = cfg.get_string("data.target", "y");
    try {
      full = Dataset::from_csv(cfg.get_string("data.path", ""), target);
    } catch (const Error& e) {
      cfg.fail("data.path", e.what());
    }
    if (cfg.has("data.test_path")) {
      try {
        ex.test = Dataset::from_csv(cfg.get_string("data.test_path", ""), target);
      } catch (const Error& e) {
        cfg.fail("data.test_path", e.what());
      }
      if (ex.test->feature_names() != full->feature_names()) {
        cfg.fail("data.test_path", "feature columns differ from data.path");
      }
      ex.train = std::move(full);
      full.reset();
    }
  }
  if (full) {
    if (test_fraction > 0.0) {
      record_seed(ctx, "split", split_seed);
      auto [train, test] = train_test_split(*full, test_fraction, split_seed);
      ex.train = std::move(train);
      ex.test = std::move(test);
    } else {
      ex.train = std::move(full);
    }
  }

  auto& m = ctx.report.metrics();
  m["n_train"] = ex.train->n();
  m["n_test"] = ex.test ? ex.test->n() : 0;
  m["p"] = ex.train->p();

  if (fit_model) {
    const LearnerSpec spec = learner_from_config(cfg);
    const RngSeed fit_seed = stream_seed(ctx.seed, Stream::fit);
    record_seed(ctx, "fit", fit_seed);
    ex.model = fit(spec, *ex.train, fit_seed);
    const Loss loss = loss_from_config(cfg);
    const Predictor pred = ex.model->predictor();
    m["train_loss"] = evaluate(pred, *ex.train, loss);
    if (ex.test) m["test_loss"] = evaluate(pred, *ex.test, loss);
  }
  return ex;
}

void attach_audit(RunContext& ctx, const Experiment& ex, const AuditPlan& plan) {
  if (!ctx.config.get_bool("audit.enabled", true) || !ex.model) return;
  const RngSeed seed = stream_seed(ctx.seed, Stream::audit);
  record_seed(ctx, "audit", seed);
  ctx.report.add_findings(
      audit(*ex.train, ex.test_ptr(), *ex.model, plan, thresholds_from_config(ctx.config), seed));
}

// ---------------------------------------------------------------------------
// Commands

void cmd_effect(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const std::string method = method_name(cfg, "pdp", {"pdp", "ice", "ale", "mplot", "pdp_2d", "pdp_band"});
  Experiment ex = prepare(ctx);
  const Dataset& data = ex.eval(cfg, "train");
  const Predictor pred = ex.model->predictor();
  const RngSeed seed = method_seed(ctx);
  const Index j = feature_from_config(cfg, data, "method.feature");
  auto& m = ctx.report.metrics();

  AuditPlan plan = base_plan(method, PlanKind::effect_1d);
  plan.feature_index = j;

  if (method == "ale") {
    const int intervals = positive_int(cfg, "method.intervals", kDefaultAleIntervals);
    const EffectCurve curve = ale(pred, data, j, intervals);
    write_curve_csv(curve, ctx.outputs.file("ale.csv"));
    m["grid_points"] = curve.values.size();
    plan.conditional = true;
    plan.grid_size = intervals;
    attach_audit(ctx, ex, plan);
    return;
  }

  const Grid grid = grid_from_config(cfg, data, j, derive_seed(seed, 0));
  plan.perturbation = perturbation_of(grid.strategy);
  plan.grid_size = static_cast<int>(grid.size());
  m["grid_points"] = grid.size();

  if (method == "pdp" || method == "ice") {
    const EffectCurve curve = ice(pred, data, grid);
    write_curve_csv(curve, ctx.outputs.file("pdp.csv"));
    write_curve_csv(curve, ctx.outputs.file("ice.csv"), true);
    if (cfg.get_bool("method.centered", false)) {
      const auto anchor = static_cast<std::size_t>(cfg.get_int("method.anchor", 0));
      if (anchor >= grid.size()) cfg.fail("method.anchor", "outside the grid");
      write_curve_csv(centered_ice(curve, anchor), ctx.outputs.file("centered_ice.csv"), true);
    }
    if (cfg.get_bool("method.derivative", false)) {
      const auto [dcurve, sd] = derivative_ice(curve);
      write_curve_csv(dcurve, ctx.outputs.file("derivative_ice.csv"), true);
      auto out = open_csv(ctx.outputs.file("dice_std.csv"), "grid,std");
      for (std::size_t g = 0; g < sd.size(); ++g) out << grid.values[g] << ',' << sd[g] << '\n';
      m["dice_std_max"] = *std::max_element(sd.begin(), sd.end());
    }
  } else if (method == "mplot") {
    const double fraction = cfg.get_double("method.fraction", kDefaultNeighborhoodFraction);
    if (!(fraction > 0.0 && fraction <= 1.0)) cfg.fail("method.fraction", "must lie in (0, 1]");
    write_curve_csv(mplot(pred, data, grid, fraction), ctx.outputs.file("mplot.csv"));
    plan.conditional = true;
  } else if (method == "pdp_2d") {
    const Index k = feature_from_config(cfg, data, "method.feature_b");
    if (k == j) cfg.fail("method.feature_b", "must differ from method.feature");
    const Grid grid_b = grid_from_config(cfg, data, k, derive_seed(seed, 1));
    write_surface_csv(pdp_2d(pred, data, grid, grid_b), ctx.outputs.file("pdp_2d.csv"));
    plan.kind = PlanKind::effect_2d;
  } else {
    const int replicates = positive_int(cfg, "method.replicates", 10);
    const Index subsample = positive_index(cfg, "method.subsample", std::max<Index>(2, data.n() / 2));
    if (subsample > data.n()) cfg.fail("method.subsample", "exceeds the number of rows");
    const Index n_per_fit = positive_index(cfg, "method.n_per_fit", ex.train->n());
    const bool centre = cfg.get_bool("method.centered", false);
    const LearnerSpec spec = ex.model->spec();
    auto est = pdp_band_estimation(pred, data, grid, replicates, subsample, derive_seed(seed, 2));
    auto ref = ex.dgp ? pdp_band_refit(spec, *ex.dgp, grid, replicates, n_per_fit, derive_seed(seed, 3))
                      : pdp_band_refit(spec, *ex.train, grid, replicates, n_per_fit, derive_seed(seed, 3));
    if (centre) {
      est = centered(est);
      ref = centered(ref);
    }
    write_curve_csv(pdp(pred, data, grid), ctx.outputs.file("pdp.csv"));
    write_band_csv(est, ctx.outputs.file("band_estimation.csv"));
    write_band_csv(ref, ctx.outputs.file("band_refit.csv"));
    m["estimation_band_width"] = est.mean_width();
    m["refit_band_width"] = ref.mean_width();
    m["refit_source"] = ex.dgp ? "dgp" : "bootstrap";
    plan.replicates = replicates;
  }
  attach_audit(ctx, ex, plan);
}

void cmd_importance(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const std::string method = method_name(cfg, "pfi", {"pfi", "cfi", "shap", "sage", "grouped_pfi"});
  Experiment ex = prepare(ctx);
  const Dataset& data = ex.eval(cfg, "test");
  const Predictor pred = ex.model->predictor();
  const Loss loss = loss_from_config(cfg);
  const RngSeed seed = method_seed(ctx);
  AuditPlan plan = base_plan(method, PlanKind::importance);
  if (cfg.has("method.feature")) plan.feature_index = feature_from_config(cfg, data, "method.feature");

  ImportanceResult result;
  if (method == "pfi" || method == "grouped_pfi") {
    const int repeats = positive_int(cfg, "method.repeats", kMinCiRepeats);
    result = method == "pfi" ? pfi(pred, data, loss, repeats, seed)
                             : grouped_pfi(pred, data, loss, groups_from_config(cfg, data), repeats, seed);
    plan.replicates = repeats;
  } else if (method == "cfi") {
    const int repeats = positive_int(cfg, "method.repeats", kMinCiRepeats);
    const int leaves = positive_int(cfg, "method.max_leaves", default_max_leaves(data.n()));
    result = cfi_all(pred, data, loss, leaves, repeats, seed);
    plan.replicates = repeats;
    plan.conditional = true;
  } else if (method == "shap") {
    const Index bg_rows = positive_index(cfg, "method.background_rows", kDefaultBackgroundRows);
    const Index eval_rows = positive_index(cfg, "method.eval_rows", 50);
    const int orderings = positive_int(cfg, "method.n_orderings", 200);
    const Dataset background = background_sample(*ex.train, derive_seed(seed, 0), bg_rows);
    const Dataset explained = background_sample(data, derive_seed(seed, 1), eval_rows);
    result = shap_importance(pred, background, explained, orderings, derive_seed(seed, 2));
  } else {
    SageOptions options;
    options.n_orderings = positive_int(cfg, "method.n_orderings", options.n_orderings);
    options.imputation_samples = positive_int(cfg, "method.imputation_samples", options.imputation_samples);
    options.batches = positive_int(cfg, "method.batches", options.batches);
    options.max_leaves = static_cast<int>(cfg.get_int("method.max_leaves", 0));
    const std::string mode = cfg.get_string("method.mode", "marginal");
    if (mode != "marginal" && mode != "conditional") {
      cfg.fail("method.mode", "expected marginal or conditional, got '" + mode + "'");
    }
    const SageMode sm = mode == "marginal" ? SageMode::marginal : SageMode::conditional;
    result = with_config_keys(cfg, [&] { return sage(pred, data, loss, sm, options, seed); });
    plan.replicates = options.batches;
    plan.conditional = sm == SageMode::conditional;
  }
  write_importance_csv(result, ctx.outputs.file("importance.csv"));
  auto& scores = ctx.report.metrics()["scores"];
  scores = Json::object();
  for (std::size_t u = 0; u < result.size(); ++u) scores[result.names[u]] = result.scores[u];
  attach_audit(ctx, ex, plan);
}

void cmd_interaction(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const std::string method = method_name(cfg, "h_statistic", {"h_statistic", "dice"});
  Experiment ex = prepare(ctx);
  const Dataset& data = ex.eval(cfg, "train");
  const Predictor pred = ex.model->predictor();
  const RngSeed seed = method_seed(ctx);
  AuditPlan plan = base_plan(method, PlanKind::interaction);
  auto& m = ctx.report.metrics();

  if (method == "h_statistic") {
    const Index rows = positive_index(cfg, "method.rows", kDefaultInteractionRows);
    const auto pairs = h_pairwise_all(pred, data, rows, seed);
    std::vector<InteractionResult> totals;
    for (Index j = 0; j < data.p(); ++j) totals.push_back(h_total(pred, data, j, rows, seed));
    write_pairwise_csv(pairs, ctx.outputs.file("h_pairwise.csv"));
    write_total_csv(totals, ctx.outputs.file("h_total.csv"));
    double best = 0.0;
    for (const auto& r : pairs) best = std::max(best, r.h_squared);
    m["max_pairwise_h_squared"] = best;
  } else {
    const Index j = feature_from_config(cfg, data, "method.feature");
    plan.feature_index = j;
    const Grid grid = grid_from_config(cfg, data, j, derive_seed(seed, 0));
    const auto sd = dice_screen(pred, data, grid);
    auto out = open_csv(ctx.outputs.file("dice_std.csv"), "grid,std");
    for (std::size_t g = 0; g < sd.size(); ++g) out << grid.values[g] << ',' << sd[g] << '\n';
    m["dice_std_max"] = *std::max_element(sd.begin(), sd.end());
    plan.perturbation = perturbation_of(grid.strategy);
    plan.grid_size = static_cast<int>(grid.size());
  }
  attach_audit(ctx, ex, plan);
}

void cmd_dependence(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const std::string method = method_name(cfg, "matrix", {"matrix", "extrapolation"});
  Experiment ex = prepare(ctx, cfg.get_bool("audit.enabled", true));
  const Dataset& data = ex.eval(cfg, "train");
  const RngSeed seed = method_seed(ctx);
  AuditPlan plan = base_plan(method, PlanKind::dependence);
  auto& m = ctx.report.metrics();

  if (method == "matrix") {
    const int perms = positive_int(cfg, "method.n_permutations", 199);
    if (perms < kMinPermutations) {
      cfg.fail("method.n_permutations", "needs at least " + std::to_string(kMinPermutations));
    }
    const auto pairs = dependence_matrix(data, perms, seed);
    write_dependence_csv(pairs, ctx.outputs.file("dependence.csv"));
    m["pairs"] = pairs.size();
  } else {
    const Index j = feature_from_config(cfg, data, "method.feature");
    plan.feature_index = j;
    const int size = positive_int(cfg, "method.grid_size", kDefaultGridSize);
    const double q = cfg.get_double("method.quantile", kDefaultExtrapolationQuantile);
    if (!(q > 0.0 && q < 1.0)) cfg.fail("method.quantile", "must lie strictly between 0 and 1");
    auto out = open_csv(ctx.outputs.file("extrapolation.csv"), "strategy,score,threshold_distance,synthetic_points");
    for (auto s : {Perturbation::equidistant, Perturbation::quantile, Perturbation::subsample,
                   Perturbation::permutation}) {
      const Matrix points = perturbation_points(data, j, s, size, derive_seed(seed, static_cast<int>(s)));
      const auto r = extrapolation_score(data, points, q);
      out << to_string(s) << ',' << r.score << ',' << r.threshold_distance << ',' << points.rows() << '\n';
      m["score_" + std::string(to_string(s))] = r.score;
    }
    plan.grid_size = size;
  }
  attach_audit(ctx, ex, plan);
}

void cmd_test(RunContext& ctx) {
  const Config& cfg = ctx.config;
  method_name(cfg, "pimp", {"pimp"});
  Experiment ex = prepare(ctx, false);
  const LearnerSpec spec = learner_from_config(cfg);
  const Loss loss = loss_from_config(cfg);
  const RngSeed seed = method_seed(ctx);

  PimpOptions options;
  options.n_target_permutations = positive_int(cfg, "method.target_permutations", options.n_target_permutations);
  if (options.n_target_permutations < kMinTargetPermutations) {
    cfg.fail("method.target_permutations", "needs at least " + std::to_string(kMinTargetPermutations));
  }
  options.pfi_repeats = positive_int(cfg, "method.pfi_repeats", options.pfi_repeats);
  Correction correction = Correction::bonferroni;
  try {
    correction = parse_correction(cfg.get_string("method.correction", "bonferroni"));
  } catch (const Error& e) {
    cfg.fail("method.correction", e.what());
  }
  const double alpha = cfg.get_double("method.alpha", 0.05);
  if (!(alpha > 0.0 && alpha < 1.0)) cfg.fail("method.alpha", "must lie strictly between 0 and 1");

  const TestedImportance raw = ex.test ? pimp(spec, *ex.train, *ex.test, loss, options, seed)
                                       : pimp(spec, *ex.train, loss, options, seed);
  const TestedImportance tested = adjust_pvalues(raw, correction, alpha);
  write_tested_csv(tested, ctx.outputs.file("tested_importance.csv"));

  auto& m = ctx.report.metrics();
  m["held_out"] = ex.test.has_value();
  m["null_replicates"] = tested.n_null_replicates;
  m["n_significant"] = tested.n_significant();
  m["n_significant_uncorrected"] = adjust_pvalues(raw, Correction::none, alpha).n_significant();

  const RngSeed fit_seed = stream_seed(ctx.seed, Stream::fit);
  record_seed(ctx, "fit", fit_seed);
  ex.model = fit(spec, *ex.train, fit_seed);
  AuditPlan plan = base_plan("pimp", PlanKind::test);
  plan.n_tested = static_cast<int>(tested.names.size());
  plan.correction = correction;
  plan.replicates = options.pfi_repeats;
  attach_audit(ctx, ex, plan);
}

void cmd_audit(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const std::string method = cfg.get_string("method.name", "pdp");
  Experiment ex = prepare(ctx);
  const Dataset& data = *ex.train;

  AuditPlan plan;
  plan.method = method;
  if (method == "pdp" || method == "ice" || method == "ale" || method == "mplot") {
    plan.kind = PlanKind::effect_1d;
  } else if (method == "pdp_2d") {
    plan.kind = PlanKind::effect_2d;
  } else if (method == "pfi" || method == "cfi" || method == "shap" || method == "sage" ||
             method == "grouped_pfi") {
    plan.kind = PlanKind::importance;
  } else if (method == "h_statistic" || method == "dice") {
    plan.kind = PlanKind::interaction;
  } else if (method == "matrix" || method == "extrapolation") {
    plan.kind = PlanKind::dependence;
  } else if (method == "pimp") {
    plan.kind = PlanKind::test;
  } else {
    cfg.fail("method.name", "unknown method '" + method + "'");
  }
  if (cfg.has("method.feature")) plan.feature_index = feature_from_config(cfg, data, "method.feature");
  try {
    const GridStrategy g = parse_grid_strategy(cfg.get_string("method.grid", "quantile"));
    plan.perturbation = perturbation_of(g);
  } catch (const Error& e) {
    cfg.fail("method.grid", e.what());
  }
  if (method == "pfi" || method == "cfi" || method == "grouped_pfi") {
    plan.perturbation = Perturbation::permutation;
  }
  plan.grid_size = positive_int(cfg, "method.grid_size", kDefaultGridSize);
  plan.replicates = static_cast<int>(cfg.get_int("method.replicates", cfg.get_int("method.repeats", 0)));
  plan.n_tested = static_cast<int>(cfg.get_int("method.n_tested", plan.kind == PlanKind::test ? data.p() : 0));
  try {
    plan.correction = parse_correction(cfg.get_string("method.correction", "none"));
  } catch (const Error& e) {
    cfg.fail("method.correction", e.what());
  }
  plan.conditional = method == "cfi" || method == "ale" || method == "mplot" ||
                     (method == "sage" && cfg.get_string("method.mode", "marginal") == "conditional");

  const RngSeed seed = stream_seed(ctx.seed, Stream::audit);
  record_seed(ctx, "audit", seed);
  const auto findings = audit(data, ex.test_ptr(), *ex.model, plan, thresholds_from_config(cfg), seed);
  ctx.report.add_findings(findings);
  std::ofstream out(ctx.outputs.file("audit.json"), std::ios::binary);
  out << findings_to_json(findings) << '\n';
  ctx.report.metrics()["findings"] = findings.size();
}

}  // namespace iml::cli
