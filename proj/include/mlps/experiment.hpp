#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlps/model.hpp"

namespace mlps {

struct ConfigError : std::invalid_argument {
  std::vector<std::string> violations;
  explicit ConfigError(std::vector<std::string> v);
};

// Per-site factor of the deterministic-duality profile f (defaults to 1).
struct ProfileEntry {
  Site site;
  double value = 1.0;
};

// One experiment as described by a config document: the model, the
// experiment-kind parameters, and the run block. Unknown keys and invariant
// violations are rejected at parse time with the full violation list.
struct ExperimentConfig {
  std::shared_ptr<const ModelSpec> model;

  std::string kind;
  std::vector<Site> xi, xi2;     // dual / labeled configurations
  std::vector<Site> eta_sites;   // forward configuration as a particle list
  std::vector<ProfileEntry> f;   // deterministic-duality profile
  std::vector<double> t_grid;
  std::vector<double> horizons;
  double rho = 0.0;
  bool has_rho = false;
  double obs_time = -1.0;
  double initial_T = 1.0;
  double max_T = 0.0;
  double min_fraction = 0.0;
  double z_max = 4.0;
  double residual_max = 1e-10;
  std::string construction = "pair";       // couple: pair | configs | sep | sip
  std::vector<std::string> checks;         // check-exact selection
  std::vector<double> rhos;                // check-exact stationarity densities
  std::vector<int> dual_counts;            // check-exact dual sector sizes
  std::vector<int> forward_counts;         // check-exact forward sector sizes

  long replicas = 0;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = ".";

  std::string config_hash;  // FNV-1a over the canonical document
};

extern const std::vector<std::string> kExperimentKinds;

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Runs the experiment, writing <out>/<kind>.csv and <out>/manifest.json.
// Returns 0 iff every per-check threshold was met.
int run_experiment(const ExperimentConfig& cfg);

}  // namespace mlps
