#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mlps/lattice.hpp"
#include "mlps/state.hpp"

namespace mlps {

struct JumpRate {
  std::vector<int> u;  // displacement, nonzero
  double rate = 0.0;
};

// Per-layer kinetics: symmetric jump-rate tables pi_sigma, the symmetric
// layer-switch matrix c, and the run-and-tumble parameters (velocity map,
// kappa, lambda). The latter are meaningful only for s = 0.
struct LayerKinetics {
  std::vector<std::vector<JumpRate>> pi;   // [layer] -> finite support table
  std::vector<std::vector<double>> c;      // [layer][layer], zero diagonal
  std::vector<std::vector<int>> velocity;  // [layer] -> vector in Z^d
  double kappa = 0.0;
  double lambda = 0.0;
};

struct ModelError : std::invalid_argument {
  std::vector<std::string> violations;
  explicit ModelError(std::vector<std::string> v);
};

// Immutable model: kind s in {-1, 0, +1}, parameter alpha, kinetics and the
// lattice they live on. All rate evaluation goes through here.
class ModelSpec {
 public:
  ModelSpec(int s, double alpha, LayerKinetics kinetics, Lattice lattice);

  static std::vector<std::string> validate(int s, double alpha, const LayerKinetics& k,
                                           const Lattice& lat);

  int s() const { return s_; }
  double alpha() const { return alpha_; }
  const Lattice& lattice() const { return lattice_; }
  const LayerKinetics& kinetics() const { return kinetics_; }
  double kappa() const { return kinetics_.kappa; }
  double lambda() const { return kinetics_.lambda; }
  double switch_rate(int a, int b) const { return kinetics_.c[a][b]; }

  // Single-transition rate p(from, to); the reversed flag negates the active
  // jump direction (time-reversed RTP). Returns 0 for disallowed pairs.
  double pair_rate(const Site& from, const Site& to, bool reversed = false) const;

  // Generator rate p(v,w) * eta_v * (alpha + s * eta_w).
  double transition_rate(const Configuration& eta, const Site& from, const Site& to) const;

  double occupancy_factor(int n_from, int n_to) const {
    return static_cast<double>(n_from) * (alpha_ + static_cast<double>(s_) * n_to);
  }

  // Static per-site target list: (target index, pair rate). Built once for
  // both orientations; shared by the simulators, the kernel and exactcheck.
  const std::vector<std::pair<long, double>>& site_targets(long site_idx, bool reversed) const {
    return reversed ? targets_rev_[site_idx] : targets_fwd_[site_idx];
  }

  // Largest single-channel per-particle rate and jump range, used for torus
  // safe-window checks.
  double max_channel_rate() const { return max_channel_rate_; }
  int max_jump_range() const { return max_jump_range_; }

 private:
  void build_targets();

  int s_;
  double alpha_;
  LayerKinetics kinetics_;
  Lattice lattice_;
  std::vector<std::vector<std::pair<long, double>>> targets_fwd_;
  std::vector<std::vector<std::pair<long, double>>> targets_rev_;
  double max_channel_rate_ = 0.0;
  int max_jump_range_ = 0;
};

}  // namespace mlps
