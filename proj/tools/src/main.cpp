#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "app.hpp"
#include "iml/version.hpp"

int main(int argc, char** argv) {
  using namespace iml::cli;
  CLI::App app{"imlkit: model-agnostic interpretation experiments"};
  app.set_version_flag("--version", std::string(iml::kVersion));
  app.require_subcommand(1);

  Invocation inv;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "Experiment config (key = value lines)");
    sub->add_option("--seed", seed, "Master seed (overrides config and IML_TOOLKIT_SEED)");
    sub->add_option("--out", inv.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--threads", inv.threads, "Worker thread cap; 0 uses all cores")->capture_default_str();
  };

  const std::pair<const char*, const char*> commands[] = {
      {"effect", "Feature effect curves (pdp, ice, ale, mplot, pdp_2d, pdp_band)"},
      {"importance", "Feature importance (pfi, cfi, shap, sage, grouped_pfi)"},
      {"interaction", "Interaction strength (h_statistic, dice)"},
      {"dependence", "Feature dependence matrix or extrapolation scores"},
      {"test", "Permutation importance hypothesis test (pimp)"},
      {"audit", "Pitfall audit for a planned interpretation"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    subs.push_back(sub);
  }
  auto* reproduce = app.add_subcommand("reproduce", "Reproduce a reference figure with acceptance checks");
  add_common(reproduce);
  reproduce->add_option("figure", inv.figure, "Figure id")->required()->check(CLI::IsMember(figure_ids()));
  subs.push_back(reproduce);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (auto* sub : subs) {
    if (sub->parsed()) {
      inv.command = sub->get_name();
      if (sub->count("--seed") > 0) inv.seed = seed;
    }
  }
  return run(inv, std::cerr);
}
