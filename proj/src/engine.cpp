#include "mlps/engine.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace mlps {

std::vector<Transition> enumerate_transitions(const ModelSpec& model, const Configuration& eta,
                                              bool reversed) {
  const auto& lat = model.lattice();
  if (static_cast<long>(eta.n.size()) != lat.num_sites())
    throw std::invalid_argument("enumerate_transitions: configuration size mismatch");
  std::vector<Transition> out;
  for (long v = 0; v < lat.num_sites(); ++v) {
    if (eta.n[v] == 0) continue;
    if (model.s() == -1 && eta.n[v] > model.alpha())
      throw std::invalid_argument("enumerate_transitions: SEP occupancy exceeds alpha");
    for (const auto& [w, base] : model.site_targets(v, reversed)) {
      double r = base * model.occupancy_factor(eta.n[v], eta.n[w]);
      if (r > 0) out.push_back({v, w, r});
    }
  }
  return out;
}

ForwardSimulator::ForwardSimulator(const ModelSpec& model, Configuration eta, bool reversed)
    : model_(&model), eta_(std::move(eta)), reversed_(reversed) {
  const auto& lat = model.lattice();
  const long N = lat.num_sites();
  if (static_cast<long>(eta_.n.size()) != N)
    throw std::invalid_argument("ForwardSimulator: configuration size mismatch");
  for (long v = 0; v < N; ++v)
    if (eta_.n[v] < 0 || (model.s() == -1 && eta_.n[v] > model.alpha()))
      throw std::invalid_argument("ForwardSimulator: invalid occupancy");

  out_.resize(N);
  site_rate_.assign(N, 0.0);
  dependents_.resize(N);
  for (long v = 0; v < N; ++v) {
    dependents_[v].push_back(v);
    for (const auto& [w, base] : model.site_targets(v, reversed_)) {
      (void)base;
      dependents_[w].push_back(v);  // rate out of v reads eta_w through the s-term
    }
  }
  for (long v = 0; v < N; ++v) {
    std::sort(dependents_[v].begin(), dependents_[v].end());
    dependents_[v].erase(std::unique(dependents_[v].begin(), dependents_[v].end()),
                         dependents_[v].end());
    rebuild_site(v);
  }
}

void ForwardSimulator::rebuild_site(long v) {
  auto& lst = out_[v];
  lst.clear();
  double total = 0.0;
  if (eta_.n[v] > 0) {
    for (const auto& [w, base] : model_->site_targets(v, reversed_)) {
      double r = base * model_->occupancy_factor(eta_.n[v], eta_.n[w]);
      if (r > 0) {
        lst.emplace_back(w, r);
        total += r;
      }
    }
  }
  site_rate_[v] = total;
}

double ForwardSimulator::total_rate() const {
  double R = 0.0;
  for (double r : site_rate_) R += r;
  return R;
}

void ForwardSimulator::apply_event(double R, double dt, RngStream& rng) {
  double target = rng.uniform() * R;
  long v = -1;
  double acc = 0.0;
  const long N = static_cast<long>(site_rate_.size());
  for (long i = 0; i < N; ++i) {
    acc += site_rate_[i];
    if (target < acc && site_rate_[i] > 0) {
      v = i;
      break;
    }
  }
  if (v < 0) {  // round-off at the upper edge: take the last active site
    for (long i = N - 1; i >= 0; --i)
      if (site_rate_[i] > 0) {
        v = i;
        break;
      }
    acc = 0.0;
    for (long i = 0; i <= v; ++i) acc += site_rate_[i];
  }
  double local = target - (acc - site_rate_[v]);
  long w = out_[v].back().first;
  double lacc = 0.0;
  for (const auto& [to, r] : out_[v]) {
    lacc += r;
    if (local < lacc) {
      w = to;
      break;
    }
  }

  --eta_.n[v];
  ++eta_.n[w];
  assert(eta_.n[v] >= 0);
  assert(model_->s() != -1 || eta_.n[w] <= model_->alpha());
  time_ += dt;
  last_ = Event{time_, v, w};
  for (long u : dependents_[v]) rebuild_site(u);
  for (long u : dependents_[w]) rebuild_site(u);
}

bool ForwardSimulator::step(RngStream& rng) {
  double R = total_rate();
  if (R <= 0.0) return false;
  double dt = rng.exponential(R);
  apply_event(R, dt, rng);
  return true;
}

void ForwardSimulator::run_until(double T, RngStream& rng, const Observer& observer) {
  if (T < 0) throw std::invalid_argument("run_until: negative horizon");
  while (time_ < T) {
    double R = total_rate();
    if (R <= 0.0) {
      time_ = T;  // absorbing: nothing happens up to the horizon
      return;
    }
    double dt = rng.exponential(R);
    if (time_ + dt > T) {
      time_ = T;
      return;
    }
    apply_event(R, dt, rng);
    if (observer) observer(last_);
  }
}

LabeledSimulator::LabeledSimulator(const ModelSpec& model, std::vector<Site> particles,
                                   bool reversed)
    : model_(&model), particles_(std::move(particles)), reversed_(reversed) {
  const auto& lat = model.lattice();
  occupancy_.assign(lat.num_sites(), 0);
  indices_.reserve(particles_.size());
  for (auto& p : particles_) {
    p = lat.canonical(p);
    long i = lat.index_of(p);
    indices_.push_back(i);
    ++occupancy_[i];
    if (model.s() == -1 && occupancy_[i] > model.alpha())
      throw std::invalid_argument("LabeledSimulator: SEP occupancy exceeds alpha");
  }
}

double LabeledSimulator::total_rate() const {
  double R = 0.0;
  for (long idx : indices_)
    for (const auto& [w, base] : model_->site_targets(idx, reversed_))
      R += base * (model_->alpha() + model_->s() * occupancy_[w]);
  return R;
}

bool LabeledSimulator::apply_event(double R, double dt, RngStream& rng, const Observer& observer) {
  double target = rng.uniform() * R;
  double acc = 0.0;
  for (size_t i = 0; i < particles_.size(); ++i) {
    for (const auto& [w, base] : model_->site_targets(indices_[i], reversed_)) {
      double r = base * (model_->alpha() + model_->s() * occupancy_[w]);
      acc += r;
      if (target < acc && r > 0) {
        long v = indices_[i];
        --occupancy_[v];
        ++occupancy_[w];
        indices_[i] = w;
        particles_[i] = model_->lattice().site_at(w);
        time_ += dt;
        if (observer) observer(Event{time_, v, w});
        return true;
      }
    }
  }
  time_ += dt;  // round-off fallthrough: clock advances, no move
  return true;
}

bool LabeledSimulator::step(RngStream& rng) {
  double R = total_rate();
  if (R <= 0.0) return false;
  double dt = rng.exponential(R);
  return apply_event(R, dt, rng, {});
}

void LabeledSimulator::run_until(double T, RngStream& rng, const Observer& observer) {
  if (T < 0) throw std::invalid_argument("run_until: negative horizon");
  while (time_ < T) {
    double R = total_rate();
    if (R <= 0.0) {
      time_ = T;
      return;
    }
    double dt = rng.exponential(R);
    if (time_ + dt > T) {
      time_ = T;
      return;
    }
    apply_event(R, dt, rng, observer);
  }
}

Configuration simulate(const ModelSpec& model, Configuration eta, double T, RngStream& rng,
                       const Observer& observer) {
  ForwardSimulator sim(model, std::move(eta));
  sim.run_until(T, rng, observer);
  return sim.state();
}

DualConfiguration simulate_dual(const ModelSpec& model, DualConfiguration xi, double T,
                                RngStream& rng, const Observer& observer) {
  LabeledSimulator sim(model, std::move(xi.particles), model.s() == 0);
  sim.run_until(T, rng, observer);
  return sim.dual_configuration();
}

}  // namespace mlps
