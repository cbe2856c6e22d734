#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mlps/model.hpp"
#include "mlps/rng.hpp"
#include "mlps/state.hpp"
#include "mlps/stats.hpp"

namespace mlps {

struct SpanDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two coupled walkers plus the phase record: internal-state coupling at
// varsigma, then per-axis (diffusive) or per-velocity-direction (ballistic)
// synchronization; tau is the full coupling time.
struct PairState {
  Site a, b;
  bool internal_synced = false;
  double varsigma = -1.0;
  std::vector<char> axis_synced;   // diffusive axes
  std::vector<double> tau_axis;
  std::vector<char> dir_synced;    // ballistic basis directions
  std::vector<double> tau_dir;
  bool coupled = false;
  double tau = -1.0;
};

// Greedy unimodular basis from the velocity range; layer indices whose
// velocity vectors form a determinant +-1 matrix. Throws SpanDeficient when
// the velocities do not generate Z^d this way.
std::vector<int> select_velocity_basis(const ModelSpec& model);

// Joint event-driven evolution of two single walkers under the model's
// one-particle dynamics: independent until the internal states meet
// (varsigma), then mirrored internal states with Ornstein coupling of the
// spatial parts (diffusive axes) or the b_k difference walks (ballistic,
// kappa = 0 with spanning velocities). Marginally each component is an
// unchanged one-particle process.
class PairCoupler {
 public:
  PairCoupler(const ModelSpec& model, const Site& a, const Site& b, bool reversed);

  double total_rate();
  void apply(RngStream& rng, double now);
  // Run the pair alone on [t0, t1]; returns the reached time.
  double advance(double t0, double t1, RngStream& rng);

  bool coupled() const { return st_.coupled; }
  const PairState& state() const { return st_; }
  const Site& component(int i) const { return i == 0 ? st_.a : st_.b; }

 private:
  struct Chan {
    double rate;
    int kind;  // 0 internal, 1 diffusive, 2 active
    int who;   // 0/1 walker, 2 shared
    int p1;    // internal: target layer; diffusive: axis
    int p2;    // diffusive: sign
  };

  void build();
  double diffusive_rate(int layer, int axis) const;
  void on_internal_sync(double now);
  void refresh_position_syncs(double now);
  int diff_axis(int k) const;                 // (a - b) mod L along axis k
  std::vector<long> ballistic_coeffs() const; // b_k mod L
  void move(int who, const std::vector<int>& u);
  void check_coupled(double now);

  const ModelSpec* m_;
  const Lattice* lat_;
  bool reversed_;
  bool diffusive_ = false;
  bool ballistic_ = false;
  std::vector<int> basis_layers_;
  std::vector<std::vector<long>> basis_inv_;  // integer inverse of the basis matrix
  PairState st_;
  std::vector<Chan> ch_;
  double tot_ = 0.0;
};

// Meeting of two independent layer chains; mirrored afterwards.
struct InternalCouplingResult {
  bool met = false;
  double varsigma = -1.0;
};
InternalCouplingResult couple_internal(const ModelSpec& model, int layer1, int layer2,
                                       double horizon, RngStream& rng);

PairState couple_irw_pair(const ModelSpec& model, const Site& a, const Site& b, double horizon,
                          RngStream& rng);
PairState couple_rtp(const ModelSpec& model, const Site& a, const Site& b, double horizon,
                     RngStream& rng);

// Label-matched pairwise coupling of two equal-size particle configurations.
struct ConfigCouplingState {
  std::vector<PairState> pairs;
  bool coupled = false;
  double tau = -1.0;
};
ConfigCouplingState couple_irw_configs(const ModelSpec& model, const std::vector<Site>& xi1,
                                       const std::vector<Site>& xi2, double horizon,
                                       RngStream& rng);

struct CouplingSchedule {
  double initial_T = 1.0;               // free-evolution time before the first attempt
  double max_T = 0.0;                   // cap on the doubling spread time (0: uncapped)
  std::vector<double> horizons;         // report grid; last entry is the run horizon
  double obs_time = -1.0;               // component-1 observable checkpoint (< 0: off)
};

struct CouplingReport {
  long replicas = 0;
  std::vector<double> horizons;
  std::vector<double> fraction_coupled;
  std::vector<double> fraction_se;
  double tau_q50 = -1.0;  // quantiles among coupled replicas
  double tau_q90 = -1.0;
  Accumulator marginal_obs;  // sum over component-1 particles of cos(2 pi x_0 / L) + layer
  Accumulator attempts;      // spread-and-retry attempt counts
};

// Per-replica outcome of one coupling construction.
struct CouplingOutcome {
  bool coupled = false;
  double tau = -1.0;
  int attempts = 0;
  double obs = 0.0;
  bool has_obs = false;
};

CouplingReport assemble_coupling_report(const std::vector<double>& horizons,
                                        const std::vector<CouplingOutcome>& outcomes);

// Monte-Carlo wrappers (replica-parallel, deterministic reduction order).
CouplingReport couple_pair_mc(const ModelSpec& model, const Site& a, const Site& b,
                              const CouplingSchedule& schedule, long replicas,
                              std::uint64_t seed, int workers = 1);
CouplingReport couple_irw_configs_mc(const ModelSpec& model, const std::vector<Site>& xi1,
                                     const std::vector<Site>& xi2,
                                     const CouplingSchedule& schedule, long replicas,
                                     std::uint64_t seed, int workers = 1);
CouplingReport couple_sep(const ModelSpec& model, const std::vector<Site>& x1,
                          const std::vector<Site>& x2, const CouplingSchedule& schedule,
                          long replicas, std::uint64_t seed, int workers = 1);
CouplingReport couple_sip(const ModelSpec& model, const std::vector<Site>& x1,
                          const std::vector<Site>& x2, const CouplingSchedule& schedule,
                          long replicas, std::uint64_t seed, int workers = 1);

// Reference observable statistics from an uncoupled run (marginal-law check).
Accumulator marginal_observable_mc(const ModelSpec& model, const std::vector<Site>& start,
                                   double T, long replicas, std::uint64_t seed, int workers = 1,
                                   bool reversed = false);

struct SpreadReport {
  std::vector<double> t_grid;
  std::vector<double> p_disjoint;
  std::vector<double> se;
  long replicas = 0;
};

// Empirical probability that the evolved dual support is disjoint from the
// support of xi2, on a time grid inside the torus safe window.
SpreadReport spread_estimator(const ModelSpec& model, const DualConfiguration& xi,
                              const DualConfiguration& xi2, const std::vector<double>& t_grid,
                              long replicas, std::uint64_t seed, int workers = 1);

}  // namespace mlps
