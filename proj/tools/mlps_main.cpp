#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mlps/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"multi-layer interacting particle system laboratory"};
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int workers = 0;
    long replicas = 0;
  };
  Flags flags;
  std::string chosen;

  for (const auto& kind : mlps::kExperimentKinds) {
    auto* sub = app.add_subcommand(kind, "run a '" + kind + "' experiment");
    sub->add_option("--config", flags.config, "config document (JSON)")->required();
    sub->add_option("--seed", flags.seed, "override run.seed");
    sub->add_option("--workers", flags.workers, "override run.workers");
    sub->add_option("--out", flags.out, "override run.out output directory");
    sub->add_option("--replicas", flags.replicas, "override the replica count");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    mlps::ExperimentConfig cfg = mlps::parse_config_file(flags.config);
    if (cfg.kind != chosen) {
      std::cerr << "config kind '" << cfg.kind << "' does not match subcommand '" << chosen
                << "'\n";
      return 2;
    }
    auto* sub = app.get_subcommand(chosen);
    if (sub->count("--seed")) cfg.seed = flags.seed;
    if (sub->count("--workers")) cfg.workers = flags.workers;
    if (sub->count("--out")) cfg.out_dir = flags.out;
    if (sub->count("--replicas")) cfg.replicas = flags.replicas;
    return mlps::run_experiment(cfg);
  } catch (const mlps::ConfigError& e) {
    std::cerr << "config rejected:\n";
    for (const auto& v : e.violations) std::cerr << "  - " << v << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
