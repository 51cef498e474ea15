#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "app.hpp"
#include "iml/effects.hpp"
#include "iml/importance.hpp"
#include "iml/inference.hpp"
#include "iml/interactions.hpp"

namespace fs = std::filesystem;
using namespace iml;
using namespace iml::cli;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void add(const std::string& name, double value, const char* rel, double threshold, bool ok) {
    pass = pass && ok;
    detail << ' ' << name << '=' << value << (ok ? "" : "!") << '(' << rel << threshold << ')';
  }
};

Outcome reproduce(const std::string& figure, const fs::path& root) {
  Outcome out;
  const Config config;
  OutputSet outputs(root / figure);
  Report report("reproduce", 0);
  RunContext ctx{config, 0, outputs, report};
  set_warning_handler([](std::string_view) {});
  const auto start = Clock::now();
  try {
    cmd_reproduce(ctx, figure);
  } catch (const std::exception& e) {
    set_warning_handler(nullptr);
    out.pass = false;
    out.detail << " error: " << e.what();
    return out;
  }
  set_warning_handler(nullptr);
  const double secs = seconds_since(start);
  report.write(outputs.dir() / "report.json", outputs, secs, false);
  for (const auto& a : report.assertions()) out.add(a.name, a.value, a.relation.c_str(), a.threshold, a.pass);
  out.detail << " [" << std::lround(secs) << "s]";
  return out;
}

std::vector<double> instance_of(const Dataset& d, Index i) {
  std::vector<double> x(static_cast<std::size_t>(d.p()));
  for (Index j = 0; j < d.p(); ++j) x[static_cast<std::size_t>(j)] = d.features()(i, j);
  return x;
}

Outcome shapley_equivalence() {
  Outcome out;
  constexpr int kModels = 10;
  constexpr int m = 2000;
  int within = 0, total = 0;
  double worst_residual = 0.0;
  double worst_ratio_gap = 0.0;
  for (int k = 0; k < kModels; ++k) {
    const RngSeed seed = derive_seed(RngSeed{9}, static_cast<std::uint64_t>(k));
    auto rng = make_rng(derive_seed(seed, 0));
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix x(300, 4);
    Vector beta(4);
    for (Index j = 0; j < 4; ++j) beta(j) = z(rng);
    for (Index i = 0; i < 300; ++i) {
      for (Index j = 0; j < 4; ++j) x(i, j) = z(rng);
    }
    Vector y = x * beta + 0.5 * x.col(0).cwiseProduct(x.col(1));
    for (Index i = 0; i < 300; ++i) y(i) += 0.3 * z(rng);
    const Dataset data(x, y);
    const Predictor f = k % 2 == 0 ? fit(forest_spec(50), data, derive_seed(seed, 1)).predictor()
                                   : Predictor::linear(beta, z(rng));
    const Dataset bg = background_sample(data, derive_seed(seed, 2), 50);
    const auto inst = instance_of(data, static_cast<Index>(rng() % 300));
    const ShapleyExplanation exact = shapley_exact(f, bg, inst);
    const ShapleyExplanation a = shapley_sampled(f, bg, inst, m, derive_seed(seed, 3));
    const ShapleyExplanation b = shapley_sampled(f, bg, inst, 4 * m, derive_seed(seed, 4));
    worst_residual = std::max(worst_residual, std::abs(exact.efficiency_residual()));
    for (Index j = 0; j < 4; ++j) {
      ++total;
      within += std::abs(a.phi(j) - exact.phi(j)) <= 3.0 * a.standard_error(j);
      if (a.standard_error(j) > 0.0) {
        worst_ratio_gap = std::max(worst_ratio_gap, std::abs(b.standard_error(j) / a.standard_error(j) - 0.5) / 0.5);
      }
    }
  }
  out.add("features_within_3se", within, ">=", total, within == total);
  out.add("max_exact_efficiency_residual", worst_residual, "<=", 1e-10, worst_residual <= 1e-10);
  out.add("max_rel_dev_se_ratio_from_0.5", worst_ratio_gap, "<=", 0.2, worst_ratio_gap <= 0.2);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome properties(const fs::path& root) {
  Outcome out;

  const Dataset add = sample(find_dgp("additive_smooth"), 300, RngSeed{1});
  const Predictor additive([](const Matrix& x) -> Vector {
    return (x.col(0).array().sin() + x.col(1).array().square() + 2.0 * x.col(2).array()).matrix();
  });
  double max_h = 0.0;
  for (const auto& r : h_pairwise_all(additive, add)) max_h = std::max(max_h, r.h_squared);
  double max_dice = 0.0;
  for (Index j = 0; j < 3; ++j) {
    for (double s : dice_screen(additive, add, build_grid(add, j))) max_dice = std::max(max_dice, s);
  }
  out.add("additive_max_h2", max_h, "<=", 1e-8, max_h <= 1e-8);
  out.add("additive_max_dice_std", max_dice, "<=", 1e-8, max_dice <= 1e-8);

  const Dataset flat = sample(find_dgp("fig6_flat"), 5000, RngSeed{2});
  LearnerSpec smooth = forest_spec(100);
  smooth.min_leaf = 20;
  const FittedModel forest = fit(smooth, flat, RngSeed{3});
  double ale_gap = 0.0;
  for (Index j = 0; j < flat.p(); ++j) {
    const EffectCurve a = ale(forest.predictor(), flat, j);
    const EffectCurve p = pdp(forest.predictor(), flat, a.grid);
    const auto c = center_on_intervals(p.values, a.interval_counts);
    for (std::size_t k = 0; k < c.size(); ++k) ale_gap = std::max(ale_gap, std::abs(a.values[k] - c[k]));
  }
  out.add("max_abs_ale_minus_centered_pdp", ale_gap, "<=", 0.05, ale_gap <= 0.05);

  const Predictor unused([](const Matrix& x) -> Vector {
    return (3.0 * x.col(0).array() - 6.0 * x.col(1).array().abs()).matrix();
  });
  std::vector<double> pfi_s, cfi_s, sage_s;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Dataset d = sample(find_dgp("fig5_masked"), 200, derive_seed(RngSeed{4}, s));
    pfi_s.push_back(pfi(unused, d, Loss(), 5, RngSeed{s}).scores[2]);
    cfi_s.push_back(cfi_all(unused, d, Loss(), default_max_leaves(d.n()), 5, RngSeed{s}).scores[2]);
    SageOptions o;
    o.n_orderings = 64;
    o.imputation_samples = 4;
    sage_s.push_back(sage(unused, d, Loss(), SageMode::marginal, o, RngSeed{s}).scores[2]);
  }
  double worst_z = 0.0;
  for (const auto* v : {&pfi_s, &cfi_s, &sage_s}) {
    const double se = std::sqrt(sample_variance(*v) / 20.0);
    const double m = std::abs(mean(*v));
    worst_z = std::max(worst_z, se > 0.0 ? m / se : (m == 0.0 ? 0.0 : 1e300));
  }
  out.add("unused_feature_max_abs_mean_over_se", worst_z, "<=", 2.0, worst_z <= 2.0);

  auto rng = make_rng(RngSeed{5});
  std::uniform_real_distribution<double> u(1e-6, 0.2);
  int violations = 0;
  for (int r = 0; r < 2000; ++r) {
    std::vector<double> p(12);
    for (auto& v : p) v = u(rng);
    const auto b = adjust_pvalues(p, Correction::bonferroni, 0.05);
    const auto h = adjust_pvalues(p, Correction::holm, 0.05);
    for (std::size_t i = 0; i < p.size(); ++i) violations += b.significant[i] && !h.significant[i];
  }
  out.add("holm_misses_bonferroni_rejection", violations, "==", 0, violations == 0);

  const fs::path cfg = root / "determinism.cfg";
  std::ofstream(cfg) << "data.dgp = fig5_masked\ndata.n = 400\nlearner.kind = random_forest\n"
                        "learner.params.trees = 30\nmethod.name = ice\nmethod.feature = X2\n";
  std::ostringstream sink;
  int identical = 0;
  const char* files[] = {"pdp.csv", "ice.csv"};
  for (int threads : {1, 4}) {
    Invocation inv;
    inv.command = "effect";
    inv.config_path = cfg;
    inv.seed = 42;
    inv.threads = threads;
    inv.out_dir = root / ("determinism_" + std::to_string(threads));
    run(inv, sink);
  }
  for (const char* f : files) {
    const std::string a = slurp(root / "determinism_1" / f);
    identical += !a.empty() && a == slurp(root / "determinism_4" / f);
  }
  out.add("byte_identical_csvs", identical, "==", 2, identical == 2);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  fs::path root = fs::current_path() / "acceptance_out";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) {
      strict = true;
    } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      root = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--strict] [--out DIR]\n";
      return 2;
    }
  }
  fs::create_directories(root);
  std::cout.precision(4);
  std::ofstream summary(root / "summary.txt");
  const auto start = Clock::now();
  int passed = 0;
  const auto report = [&](int id, Outcome o) {
    passed += o.pass;
    std::ostringstream line;
    line << "AC" << id << ' ' << (o.pass ? "PASS" : "FAIL") << o.detail.str();
    std::cout << line.str() << std::endl;
    summary << line.str() << std::endl;
  };

  const std::pair<int, const char*> figures[] = {{1, "fig2"}, {2, "fig3"}, {3, "fig4_cond"}, {4, "fig5"},
                                                 {5, "fig6"}, {6, "fig8"}, {7, "scm8"},      {8, "assoc"}};
  for (const auto& [id, figure] : figures) report(id, reproduce(figure, root));
  report(9, shapley_equivalence());
  Outcome props = properties(root);
  const double total = seconds_since(start);
  props.add("acceptance_seconds", total, "<=", 1800.0, total <= 1800.0);
  report(10, std::move(props));

  std::cout << "acceptance: " << passed << "/10 criteria pass in " << std::lround(total) << "s" << std::endl;
  summary << "acceptance: " << passed << "/10 criteria pass in " << std::lround(total) << "s" << std::endl;
  return strict && passed < 10 ? 1 : 0;
}
