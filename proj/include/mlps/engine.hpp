#pragma once

#include <functional>
#include <vector>

#include "mlps/model.hpp"
#include "mlps/rng.hpp"
#include "mlps/state.hpp"

namespace mlps {

struct Transition {
  long from = 0;
  long to = 0;
  double rate = 0.0;
};

struct Event {
  double time = 0.0;
  long from = 0;
  long to = 0;
};

using Observer = std::function<void(const Event&)>;

// All positive-rate single-particle moves out of eta under the generator;
// reversed selects the time-reversed RTP rates (s = 0 only).
std::vector<Transition> enumerate_transitions(const ModelSpec& model, const Configuration& eta,
                                              bool reversed = false);

// Exact event-driven simulation of the occupancy process. Rates are cached
// per source site and rebuilt only in the neighborhood of the moved particle.
class ForwardSimulator {
 public:
  ForwardSimulator(const ModelSpec& model, Configuration eta, bool reversed = false);

  // One Gillespie step; returns false from an absorbing state (total rate 0).
  bool step(RngStream& rng);

  // Advance to time T, reporting every event to the observer.
  void run_until(double T, RngStream& rng, const Observer& observer = {});

  double time() const { return time_; }
  const Configuration& state() const { return eta_; }
  const Event& last_event() const { return last_; }
  double total_rate() const;

 private:
  void rebuild_site(long v);
  void apply_event(double R, double dt, RngStream& rng);

  const ModelSpec* model_;
  Configuration eta_;
  bool reversed_;
  std::vector<std::vector<std::pair<long, double>>> out_;  // per site: (target, rate)
  std::vector<double> site_rate_;
  std::vector<std::vector<long>> dependents_;  // sites whose out-rates read this occupancy
  double time_ = 0.0;
  Event last_;
};

// Labeled-particle simulation (dual process). For s = +-1 the dual dynamics
// coincide with the forward dynamics; for s = 0 pass reversed = true to get
// the time-reversed RTP.
class LabeledSimulator {
 public:
  LabeledSimulator(const ModelSpec& model, std::vector<Site> particles, bool reversed);

  bool step(RngStream& rng);
  void run_until(double T, RngStream& rng, const Observer& observer = {});

  double time() const { return time_; }
  double total_rate() const;
  const std::vector<Site>& particles() const { return particles_; }
  DualConfiguration dual_configuration() const { return DualConfiguration{particles_}; }

 private:
  bool apply_event(double R, double dt, RngStream& rng, const Observer& observer);

  const ModelSpec* model_;
  std::vector<Site> particles_;
  std::vector<long> indices_;
  std::vector<int> occupancy_;
  bool reversed_;
  double time_ = 0.0;
};

// Convenience wrappers.
Configuration simulate(const ModelSpec& model, Configuration eta, double T, RngStream& rng,
                       const Observer& observer = {});
DualConfiguration simulate_dual(const ModelSpec& model, DualConfiguration xi, double T,
                                RngStream& rng, const Observer& observer = {});

}  // namespace mlps
