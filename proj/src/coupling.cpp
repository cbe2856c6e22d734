#include "mlps/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mlps/engine.hpp"
#include "mlps/parallel.hpp"

namespace mlps {

namespace {

long det_int(std::vector<std::vector<long>> m) {
  const size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  long det = 0;
  for (size_t c = 0; c < n; ++c) {
    std::vector<std::vector<long>> minor;
    for (size_t r = 1; r < n; ++r) {
      std::vector<long> row;
      for (size_t cc = 0; cc < n; ++cc)
        if (cc != c) row.push_back(m[r][cc]);
      minor.push_back(std::move(row));
    }
    long cof = det_int(minor);
    det += ((c % 2 == 0) ? 1 : -1) * m[0][c] * cof;
  }
  return det;
}

std::vector<std::vector<long>> adjugate(const std::vector<std::vector<long>>& m) {
  const size_t n = m.size();
  std::vector<std::vector<long>> adj(n, std::vector<long>(n, 0));
  if (n == 1) {
    adj[0][0] = 1;
    return adj;
  }
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < n; ++c) {
      std::vector<std::vector<long>> minor;
      for (size_t rr = 0; rr < n; ++rr) {
        if (rr == r) continue;
        std::vector<long> row;
        for (size_t cc = 0; cc < n; ++cc)
          if (cc != c) row.push_back(m[rr][cc]);
        minor.push_back(std::move(row));
      }
      long cof = det_int(minor);
      if ((r + c) % 2 == 1) cof = -cof;
      adj[c][r] = cof;  // transpose of the cofactor matrix
    }
  }
  return adj;
}

double pair_observable(const Lattice& lat, const Site& s) {
  return std::cos(2.0 * M_PI * static_cast<double>(s.x[0]) / static_cast<double>(lat.side())) +
         static_cast<double>(s.layer);
}

bool combos(std::vector<int>& pick, int next, int need, int total,
            const std::function<bool(const std::vector<int>&)>& visit) {
  if (need == 0) return visit(pick);
  for (int i = next; i <= total - need; ++i) {
    pick.push_back(i);
    if (combos(pick, i + 1, need - 1, total, visit)) return true;
    pick.pop_back();
  }
  return false;
}

}  // namespace

std::vector<int> select_velocity_basis(const ModelSpec& model) {
  if (model.s() != 0 || model.lambda() <= 0)
    throw std::invalid_argument("select_velocity_basis: needs s=0 with lambda > 0");
  const int d = model.lattice().dim();
  const auto& vel = model.kinetics().velocity;
  const int m = static_cast<int>(vel.size());
  if (m < d)
    throw SpanDeficient("velocity range has fewer vectors than dimensions");

  std::vector<int> result;
  std::vector<int> pick;
  bool found = combos(pick, 0, d, m, [&](const std::vector<int>& layers) {
    std::vector<std::vector<long>> B(d, std::vector<long>(d));
    for (int c = 0; c < d; ++c)
      for (int r = 0; r < d; ++r) B[r][c] = vel[layers[c]][r];
    long det = det_int(B);
    if (det == 1 || det == -1) {
      result = layers;
      return true;
    }
    return false;
  });
  if (!found)
    throw SpanDeficient("velocity range does not admit a unimodular basis of Z^d");
  return result;
}

PairCoupler::PairCoupler(const ModelSpec& model, const Site& a, const Site& b, bool reversed)
    : m_(&model), lat_(&model.lattice()), reversed_(reversed) {
  st_.a = lat_->canonical(a);
  st_.b = lat_->canonical(b);
  const int d = lat_->dim();

  diffusive_ = (model.s() != 0) || (model.kappa() > 0);
  ballistic_ = (model.s() == 0 && model.kappa() == 0 && model.lambda() > 0);

  if (diffusive_) {
    // Ornstein coupling works axis by axis; restrict to nearest-neighbor
    // jump tables so every jump lives on one axis.
    for (const auto& table : model.kinetics().pi)
      for (const auto& jr : table) {
        int nz = 0, mag = 0;
        for (int c : jr.u) {
          if (c != 0) ++nz;
          mag = std::max(mag, std::abs(c));
        }
        if (nz != 1 || mag != 1)
          throw std::invalid_argument(
              "PairCoupler: diffusive coupling requires nearest-neighbor jump tables");
      }
    st_.axis_synced.assign(d, 0);
    st_.tau_axis.assign(d, -1.0);
  }
  if (ballistic_) {
    basis_layers_ = select_velocity_basis(model);
    std::vector<std::vector<long>> B(d, std::vector<long>(d));
    for (int c = 0; c < d; ++c)
      for (int r = 0; r < d; ++r) B[r][c] = m_->kinetics().velocity[basis_layers_[c]][r];
    long det = det_int(B);
    basis_inv_ = adjugate(B);
    for (auto& row : basis_inv_)
      for (auto& x : row) x *= det;  // det = +-1, so adj * det is the inverse
    st_.dir_synced.assign(d, 0);
    st_.tau_dir.assign(d, -1.0);
  }

  if (st_.a.layer == st_.b.layer) on_internal_sync(0.0);
  check_coupled(0.0);
}

double PairCoupler::diffusive_rate(int layer, int axis) const {
  double r = 0.0;
  for (const auto& jr : m_->kinetics().pi[layer])
    if (jr.u[axis] == 1) r += jr.rate;
  if (m_->s() == 0) return m_->kappa() * r;
  return m_->alpha() * r;  // one interacting particle: alpha * pi
}

int PairCoupler::diff_axis(int k) const {
  int L = lat_->side();
  int r = (st_.a.x[k] - st_.b.x[k]) % L;
  if (r < 0) r += L;
  return r;
}

std::vector<long> PairCoupler::ballistic_coeffs() const {
  const int d = lat_->dim();
  const long L = lat_->side();
  std::vector<long> b(d, 0);
  for (int k = 0; k < d; ++k) {
    long acc = 0;
    for (int j = 0; j < d; ++j) acc += basis_inv_[k][j] * static_cast<long>(diff_axis(j));
    acc %= L;
    if (acc < 0) acc += L;
    b[k] = acc;
  }
  return b;
}

void PairCoupler::on_internal_sync(double now) {
  st_.internal_synced = true;
  st_.varsigma = now;
  refresh_position_syncs(now);
}

void PairCoupler::refresh_position_syncs(double now) {
  if (!st_.internal_synced) return;
  if (diffusive_)
    for (size_t k = 0; k < st_.axis_synced.size(); ++k)
      if (!st_.axis_synced[k] && diff_axis(static_cast<int>(k)) == 0) {
        st_.axis_synced[k] = 1;
        st_.tau_axis[k] = now;
      }
  if (ballistic_) {
    auto b = ballistic_coeffs();
    for (size_t k = 0; k < st_.dir_synced.size(); ++k)
      if (!st_.dir_synced[k] && b[k] == 0) {
        st_.dir_synced[k] = 1;
        st_.tau_dir[k] = now;
      }
  }
}

void PairCoupler::check_coupled(double now) {
  if (st_.coupled) return;
  if (st_.internal_synced && st_.a == st_.b) {
    st_.coupled = true;
    st_.tau = now;
    for (size_t k = 0; k < st_.axis_synced.size(); ++k)
      if (!st_.axis_synced[k]) {
        st_.axis_synced[k] = 1;
        st_.tau_axis[k] = now;
      }
    for (size_t k = 0; k < st_.dir_synced.size(); ++k)
      if (!st_.dir_synced[k]) {
        st_.dir_synced[k] = 1;
        st_.tau_dir[k] = now;
      }
  }
}

void PairCoupler::build() {
  ch_.clear();
  tot_ = 0.0;
  const int d = lat_->dim();
  const int layers = lat_->layers();
  auto add = [&](double rate, int kind, int who, int p1, int p2) {
    if (rate > 0) {
      ch_.push_back({rate, kind, who, p1, p2});
      tot_ += rate;
    }
  };

  if (!st_.internal_synced) {
    for (int who = 0; who < 2; ++who) {
      const Site& s = who == 0 ? st_.a : st_.b;
      for (int b = 0; b < layers; ++b) add(m_->switch_rate(s.layer, b), 0, who, b, 0);
      if (diffusive_)
        for (int k = 0; k < d; ++k) {
          double r = diffusive_rate(s.layer, k);
          add(r, 1, who, k, +1);
          add(r, 1, who, k, -1);
        }
      if (m_->s() == 0 && m_->lambda() > 0) add(m_->lambda(), 2, who, 0, 0);
    }
    return;
  }

  const int sigma = st_.a.layer;  // shared layer after varsigma
  for (int b = 0; b < layers; ++b) add(m_->switch_rate(sigma, b), 0, 2, b, 0);
  if (diffusive_)
    for (int k = 0; k < d; ++k) {
      double r = diffusive_rate(sigma, k);
      if (st_.axis_synced[k]) {
        add(r, 1, 2, k, +1);
        add(r, 1, 2, k, -1);
      } else {
        add(r, 1, 0, k, +1);
        add(r, 1, 0, k, -1);
        add(r, 1, 1, k, +1);
        add(r, 1, 1, k, -1);
      }
    }
  if (m_->s() == 0 && m_->lambda() > 0) {
    bool shared = true;
    if (ballistic_) {
      auto it = std::find(basis_layers_.begin(), basis_layers_.end(), sigma);
      if (it != basis_layers_.end()) {
        size_t k = static_cast<size_t>(it - basis_layers_.begin());
        if (!st_.dir_synced[k]) shared = false;
      }
    }
    if (shared) {
      add(m_->lambda(), 2, 2, 0, 0);
    } else {
      add(m_->lambda(), 2, 0, 0, 0);
      add(m_->lambda(), 2, 1, 0, 0);
    }
  }
}

double PairCoupler::total_rate() {
  build();
  return tot_;
}

void PairCoupler::move(int who, const std::vector<int>& u) {
  if (who == 0 || who == 2) st_.a = lat_->displace(st_.a, u);
  if (who == 1 || who == 2) st_.b = lat_->displace(st_.b, u);
}

void PairCoupler::apply(RngStream& rng, double now) {
  // channel list from the last total_rate() call
  double target = rng.uniform() * tot_;
  const Chan* sel = &ch_.back();
  double acc = 0.0;
  for (const auto& c : ch_) {
    acc += c.rate;
    if (target < acc) {
      sel = &c;
      break;
    }
  }
  const int d = lat_->dim();
  switch (sel->kind) {
    case 0: {  // internal
      if (sel->who == 2) {
        st_.a.layer = sel->p1;
        st_.b.layer = sel->p1;
      } else {
        Site& s = sel->who == 0 ? st_.a : st_.b;
        s.layer = sel->p1;
        if (!st_.internal_synced && st_.a.layer == st_.b.layer) on_internal_sync(now);
      }
      break;
    }
    case 1: {  // diffusive axis jump
      std::vector<int> u(d, 0);
      u[sel->p1] = sel->p2;
      move(sel->who, u);
      if (st_.internal_synced && sel->who != 2 && !st_.axis_synced[sel->p1] &&
          diff_axis(sel->p1) == 0) {
        st_.axis_synced[sel->p1] = 1;
        st_.tau_axis[sel->p1] = now;
      }
      break;
    }
    case 2: {  // active jump
      if (sel->who == 2) {
        auto u = m_->kinetics().velocity[st_.a.layer];
        if (reversed_)
          for (auto& c : u) c = -c;
        move(2, u);
      } else {
        const Site& s = sel->who == 0 ? st_.a : st_.b;
        auto u = m_->kinetics().velocity[s.layer];
        if (reversed_)
          for (auto& c : u) c = -c;
        move(sel->who, u);
        if (ballistic_) refresh_position_syncs(now);
      }
      break;
    }
  }
  check_coupled(now);
}

double PairCoupler::advance(double t0, double t1, RngStream& rng) {
  double t = t0;
  for (;;) {
    double R = total_rate();
    if (R <= 0.0) return t1;
    double dt = rng.exponential(R);
    if (t + dt > t1) return t1;
    t += dt;
    apply(rng, t);
  }
}

InternalCouplingResult couple_internal(const ModelSpec& model, int layer1, int layer2,
                                       double horizon, RngStream& rng) {
  const int m = model.lattice().layers();
  if (layer1 < 0 || layer1 >= m || layer2 < 0 || layer2 >= m)
    throw std::invalid_argument("couple_internal: layer out of range");
  InternalCouplingResult res;
  if (layer1 == layer2) {
    res.met = true;
    res.varsigma = 0.0;
    return res;
  }
  double t = 0.0;
  int s1 = layer1, s2 = layer2;
  while (t < horizon) {
    double R = 0.0;
    for (int b = 0; b < m; ++b) R += model.switch_rate(s1, b) + model.switch_rate(s2, b);
    if (R <= 0.0) return res;
    double dt = rng.exponential(R);
    if (t + dt > horizon) return res;
    t += dt;
    double target = rng.uniform() * R;
    double acc = 0.0;
    for (int who = 0; who < 2; ++who) {
      int& s = who == 0 ? s1 : s2;
      for (int b = 0; b < m; ++b) {
        acc += model.switch_rate(s, b);
        if (target < acc) {
          s = b;
          goto applied;
        }
      }
    }
  applied:
    if (s1 == s2) {
      res.met = true;
      res.varsigma = t;
      return res;
    }
  }
  return res;
}

PairState couple_irw_pair(const ModelSpec& model, const Site& a, const Site& b, double horizon,
                          RngStream& rng) {
  PairCoupler pc(model, a, b, model.s() == 0);
  pc.advance(0.0, horizon, rng);
  return pc.state();
}

PairState couple_rtp(const ModelSpec& model, const Site& a, const Site& b, double horizon,
                     RngStream& rng) {
  if (model.s() != 0) throw std::invalid_argument("couple_rtp: requires s = 0");
  PairCoupler pc(model, a, b, true);
  pc.advance(0.0, horizon, rng);
  return pc.state();
}

namespace {

// Joint clock over several pair couplers on [t0, t1].
double advance_pairs(std::vector<PairCoupler>& pcs, double t0, double t1, RngStream& rng) {
  double t = t0;
  for (;;) {
    double R = 0.0;
    for (auto& pc : pcs) R += pc.total_rate();
    if (R <= 0.0) return t1;
    double dt = rng.exponential(R);
    if (t + dt > t1) return t1;
    t += dt;
    double target = rng.uniform() * R;
    double acc = 0.0;
    for (auto& pc : pcs) {
      double r = pc.total_rate();
      acc += r;
      if (target < acc) {
        pc.apply(rng, t);
        break;
      }
    }
  }
}

}  // namespace

ConfigCouplingState couple_irw_configs(const ModelSpec& model, const std::vector<Site>& xi1,
                                       const std::vector<Site>& xi2, double horizon,
                                       RngStream& rng) {
  if (xi1.size() != xi2.size())
    throw std::invalid_argument("couple_irw_configs: particle counts differ");
  std::vector<PairCoupler> pcs;
  pcs.reserve(xi1.size());
  for (size_t i = 0; i < xi1.size(); ++i)
    pcs.emplace_back(model, xi1[i], xi2[i], model.s() == 0);
  advance_pairs(pcs, 0.0, horizon, rng);
  ConfigCouplingState out;
  out.coupled = true;
  out.tau = 0.0;
  for (auto& pc : pcs) {
    out.pairs.push_back(pc.state());
    if (!pc.coupled())
      out.coupled = false;
    else
      out.tau = std::max(out.tau, pc.state().tau);
  }
  if (!out.coupled) out.tau = -1.0;
  return out;
}

CouplingReport assemble_coupling_report(const std::vector<double>& horizons,
                                        const std::vector<CouplingOutcome>& outcomes) {
  CouplingReport rep;
  rep.replicas = static_cast<long>(outcomes.size());
  rep.horizons = horizons;
  std::vector<double> taus;
  for (const auto& o : outcomes) {
    if (o.coupled) taus.push_back(o.tau);
    if (o.has_obs) rep.marginal_obs.add(o.obs);
    rep.attempts.add(static_cast<double>(o.attempts));
  }
  for (double h : horizons) {
    long hit = 0;
    for (const auto& o : outcomes)
      if (o.coupled && o.tau <= h) ++hit;
    double p = static_cast<double>(hit) / static_cast<double>(outcomes.size());
    rep.fraction_coupled.push_back(p);
    rep.fraction_se.push_back(
        std::sqrt(p * (1.0 - p) / static_cast<double>(outcomes.size())));
  }
  if (!taus.empty()) {
    std::sort(taus.begin(), taus.end());
    auto q = [&](double f) {
      size_t idx = static_cast<size_t>(f * static_cast<double>(taus.size() - 1));
      return taus[idx];
    };
    rep.tau_q50 = q(0.5);
    rep.tau_q90 = q(0.9);
  }
  return rep;
}

CouplingReport couple_pair_mc(const ModelSpec& model, const Site& a, const Site& b,
                              const CouplingSchedule& schedule, long replicas,
                              std::uint64_t seed, int workers) {
  if (schedule.horizons.empty())
    throw std::invalid_argument("couple_pair_mc: empty horizon grid");
  const double H = schedule.horizons.back();
  std::vector<CouplingOutcome> outcomes(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    PairCoupler pc(model, a, b, model.s() == 0);
    CouplingOutcome& o = outcomes[i];
    if (schedule.obs_time >= 0.0 && schedule.obs_time <= H) {
      pc.advance(0.0, schedule.obs_time, rng);
      o.obs = pair_observable(model.lattice(), pc.component(0));
      o.has_obs = true;
      pc.advance(schedule.obs_time, H, rng);
    } else {
      pc.advance(0.0, H, rng);
    }
    o.coupled = pc.coupled();
    o.tau = pc.state().tau;
  });
  return assemble_coupling_report(schedule.horizons, outcomes);
}

CouplingReport couple_irw_configs_mc(const ModelSpec& model, const std::vector<Site>& xi1,
                                     const std::vector<Site>& xi2,
                                     const CouplingSchedule& schedule, long replicas,
                                     std::uint64_t seed, int workers) {
  if (xi1.size() != xi2.size())
    throw std::invalid_argument("couple_irw_configs_mc: particle counts differ");
  if (schedule.horizons.empty())
    throw std::invalid_argument("couple_irw_configs_mc: empty horizon grid");
  const double H = schedule.horizons.back();
  std::vector<CouplingOutcome> outcomes(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    std::vector<PairCoupler> pcs;
    for (size_t j = 0; j < xi1.size(); ++j)
      pcs.emplace_back(model, xi1[j], xi2[j], model.s() == 0);
    CouplingOutcome& o = outcomes[i];
    if (schedule.obs_time >= 0.0 && schedule.obs_time <= H) {
      advance_pairs(pcs, 0.0, schedule.obs_time, rng);
      double v = 0.0;
      for (auto& pc : pcs) v += pair_observable(model.lattice(), pc.component(0));
      o.obs = v;
      o.has_obs = true;
      advance_pairs(pcs, schedule.obs_time, H, rng);
    } else {
      advance_pairs(pcs, 0.0, H, rng);
    }
    o.coupled = true;
    o.tau = 0.0;
    for (auto& pc : pcs) {
      if (!pc.coupled()) o.coupled = false;
      else o.tau = std::max(o.tau, pc.state().tau);
    }
    if (!o.coupled) o.tau = -1.0;
  });
  return assemble_coupling_report(schedule.horizons, outcomes);
}

namespace {

bool has_collision(const ModelSpec& model, const std::vector<Site>& ps) {
  const auto& lat = model.lattice();
  for (size_t i = 0; i < ps.size(); ++i)
    for (size_t j = i + 1; j < ps.size(); ++j) {
      if (ps[i].layer == ps[j].layer) {
        if (lat.l1_distance(ps[i], ps[j]) <= 1) return true;
      } else if (ps[i].x == ps[j].x && model.switch_rate(ps[i].layer, ps[j].layer) > 0) {
        return true;
      }
    }
  return false;
}

double config_observable(const Lattice& lat, const std::vector<Site>& ps) {
  double v = 0.0;
  for (const auto& s : ps) v += pair_observable(lat, s);
  return v;
}

// Spread-and-retry construction: free interacting evolution for T, then an
// IRW coupling attempt with collision detection; on collision T doubles and
// the free evolution resumes from the current state.
CouplingOutcome spread_retry_replica(const ModelSpec& model, std::vector<Site> p1,
                                     std::vector<Site> p2, const CouplingSchedule& schedule,
                                     RngStream& rng) {
  const auto& lat = model.lattice();
  const double H = schedule.horizons.back();
  const size_t n = p1.size();
  CouplingOutcome o;
  double t = 0.0;
  double T = schedule.initial_T;
  double obs_time = schedule.obs_time;
  // on a finite torus, spreading beyond the mixing scale adds nothing, so
  // the doubling can be capped by the schedule
  auto grow_T = [&] {
    T *= 2.0;
    if (schedule.max_T > 0 && T > schedule.max_T) T = schedule.max_T;
  };

  auto maybe_obs_positions = [&](const std::vector<Site>& ps, double now) {
    if (!o.has_obs && obs_time >= 0.0 && now >= obs_time) {
      o.obs = config_observable(lat, ps);
      o.has_obs = true;
    }
  };

  bool attempt_phase = (n <= 1);  // a single particle never collides
  while (t < H) {
    if (!attempt_phase) {
      double dur = std::min(T, H - t);
      for (int which = 0; which < 2; ++which) {
        auto& ps = which == 0 ? p1 : p2;
        LabeledSimulator sim(model, ps, false);
        if (which == 0 && obs_time >= 0.0 && !o.has_obs && obs_time > t &&
            obs_time <= t + dur) {
          sim.run_until(obs_time - t, rng);
          o.obs = config_observable(lat, sim.particles());
          o.has_obs = true;
        }
        sim.run_until(dur, rng);
        ps = sim.particles();
      }
      t += dur;
      if (t >= H) break;
      attempt_phase = true;
      if (n > 1 && (has_collision(model, p1) || has_collision(model, p2))) {
        // not spread out enough yet; double and keep evolving freely
        ++o.attempts;
        grow_T();
        attempt_phase = false;
        continue;
      }
    }

    // coupling attempt
    std::vector<PairCoupler> pcs;
    for (size_t j = 0; j < n; ++j)
      pcs.emplace_back(model, p1[j], p2[j], false);
    bool collided = false;
    while (t < H) {
      double R = 0.0;
      for (auto& pc : pcs) R += pc.total_rate();
      if (R <= 0.0) {
        t = H;
        break;
      }
      double dt = rng.exponential(R);
      if (t + dt > H) {
        t = H;
        break;
      }
      maybe_obs_positions(p1, t);  // positions are constant between events
      if (obs_time >= 0.0 && !o.has_obs && obs_time > t && obs_time <= t + dt) {
        o.obs = config_observable(lat, p1);
        o.has_obs = true;
      }
      t += dt;
      double target = rng.uniform() * R;
      double acc = 0.0;
      for (auto& pc : pcs) {
        double r = pc.total_rate();
        acc += r;
        if (target < acc) {
          pc.apply(rng, t);
          break;
        }
      }
      for (size_t j = 0; j < n; ++j) {
        p1[j] = pcs[j].component(0);
        p2[j] = pcs[j].component(1);
      }
      if (n > 1 && (has_collision(model, p1) || has_collision(model, p2))) {
        ++o.attempts;
        grow_T();
        collided = true;
        break;
      }
      bool all = true;
      double tau = 0.0;
      for (auto& pc : pcs) {
        if (!pc.coupled()) {
          all = false;
          break;
        }
        tau = std::max(tau, pc.state().tau);
      }
      if (all) {
        o.coupled = true;
        o.tau = tau;
        // identical configurations from here on; finish the component-1
        // observable under the true dynamics if still pending
        if (obs_time >= 0.0 && !o.has_obs && obs_time > t) {
          LabeledSimulator sim(model, p1, false);
          sim.run_until(obs_time - t, rng);
          o.obs = config_observable(lat, sim.particles());
          o.has_obs = true;
        }
        return o;
      }
    }
    if (!collided && t >= H) break;
    attempt_phase = false;
  }
  if (obs_time >= 0.0 && !o.has_obs) {
    o.obs = config_observable(lat, p1);
    o.has_obs = true;
  }
  return o;
}

// Ladder lift of a SEP configuration: particles at a site occupy the lowest
// free rungs.
std::uint64_t ladder_lift(const Lattice& lat, int alpha, const std::vector<Site>& ps) {
  std::vector<int> count(lat.num_sites(), 0);
  std::uint64_t mask = 0;
  for (const auto& s : ps) {
    long v = lat.index_of(s);
    mask |= 1ULL << (v * alpha + count[v]);
    ++count[v];
  }
  return mask;
}

// Basic coupling of the capacity-1 exclusion process on the ladder graph:
// both copies share every (source rung, target rung) Poisson clock.
CouplingOutcome ladder_sep_replica(const ModelSpec& model, const std::vector<Site>& x1,
                                   const std::vector<Site>& x2,
                                   const CouplingSchedule& schedule, RngStream& rng) {
  const auto& lat = model.lattice();
  const int alpha = static_cast<int>(model.alpha());
  const long N = lat.num_sites();
  if (N * alpha > 62)
    throw std::runtime_error("ladder coupling: ladder space too large for the bitmask");

  struct Edge {
    long v, w;
    double cum;
  };
  std::vector<Edge> edges;
  double total = 0.0;
  for (long v = 0; v < N; ++v)
    for (const auto& [w, base] : model.site_targets(v, false)) {
      total += base * alpha * alpha;  // one clock per rung pair
      edges.push_back({v, w, total});
    }

  std::uint64_t m1 = ladder_lift(lat, alpha, x1);
  std::uint64_t m2 = ladder_lift(lat, alpha, x2);
  CouplingOutcome o;
  double t = 0.0;
  const double H = schedule.horizons.back();
  double need = H;
  if (schedule.obs_time >= 0.0) need = std::max(need, schedule.obs_time);

  auto project_obs = [&](std::uint64_t mask) {
    double v = 0.0;
    for (long s = 0; s < N; ++s)
      for (int j = 0; j < alpha; ++j)
        if (mask & (1ULL << (s * alpha + j))) v += pair_observable(lat, lat.site_at(s));
    return v;
  };

  if (m1 == m2) {
    o.coupled = true;
    o.tau = 0.0;
  }
  while (t < need) {
    double dt = rng.exponential(total);
    if (schedule.obs_time >= 0.0 && !o.has_obs && schedule.obs_time > t &&
        schedule.obs_time <= t + dt) {
      o.obs = project_obs(m1);
      o.has_obs = true;
    }
    if (t + dt > need) break;
    t += dt;
    double target = rng.uniform() * total;
    size_t lo = 0, hi = edges.size() - 1;
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (target < edges[mid].cum)
        hi = mid;
      else
        lo = mid + 1;
    }
    long j = rng.uniform_int(alpha);
    long k = rng.uniform_int(alpha);
    long src = edges[lo].v * alpha + j;
    long dst = edges[lo].w * alpha + k;
    for (std::uint64_t* m : {&m1, &m2}) {
      bool occ_src = (*m >> src) & 1;
      bool occ_dst = (*m >> dst) & 1;
      if (occ_src && !occ_dst) {
        *m &= ~(1ULL << src);
        *m |= 1ULL << dst;
      }
    }
    if (!o.coupled && m1 == m2) {
      o.coupled = true;
      o.tau = t;
    }
    if (o.coupled && o.tau <= H && (schedule.obs_time < 0.0 || o.has_obs) ) break;
  }
  if (schedule.obs_time >= 0.0 && !o.has_obs) {
    o.obs = project_obs(m1);
    o.has_obs = true;
  }
  if (o.coupled && o.tau > H) o.coupled = false;  // outside the report window
  return o;
}

}  // namespace

CouplingReport couple_sep(const ModelSpec& model, const std::vector<Site>& x1,
                          const std::vector<Site>& x2, const CouplingSchedule& schedule,
                          long replicas, std::uint64_t seed, int workers) {
  if (model.s() != -1) throw std::invalid_argument("couple_sep: requires s = -1");
  if (x1.size() != x2.size()) throw std::invalid_argument("couple_sep: particle counts differ");
  if (schedule.horizons.empty()) throw std::invalid_argument("couple_sep: empty horizon grid");
  const bool recurrent = model.lattice().dim() <= 2;
  std::vector<CouplingOutcome> outcomes(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    if (x1.size() <= 1)
      outcomes[i] = spread_retry_replica(model, x1, x2, schedule, rng);
    else if (recurrent)
      outcomes[i] = ladder_sep_replica(model, x1, x2, schedule, rng);
    else
      outcomes[i] = spread_retry_replica(model, x1, x2, schedule, rng);
  });
  return assemble_coupling_report(schedule.horizons, outcomes);
}

CouplingReport couple_sip(const ModelSpec& model, const std::vector<Site>& x1,
                          const std::vector<Site>& x2, const CouplingSchedule& schedule,
                          long replicas, std::uint64_t seed, int workers) {
  if (model.s() != 1) throw std::invalid_argument("couple_sip: requires s = +1");
  if (x1.size() != x2.size()) throw std::invalid_argument("couple_sip: particle counts differ");
  if (schedule.horizons.empty()) throw std::invalid_argument("couple_sip: empty horizon grid");
  std::vector<CouplingOutcome> outcomes(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    outcomes[i] = spread_retry_replica(model, x1, x2, schedule, rng);
  });
  return assemble_coupling_report(schedule.horizons, outcomes);
}

Accumulator marginal_observable_mc(const ModelSpec& model, const std::vector<Site>& start,
                                   double T, long replicas, std::uint64_t seed, int workers,
                                   bool reversed) {
  std::vector<double> vals(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    LabeledSimulator sim(model, start, reversed);
    sim.run_until(T, rng);
    vals[i] = config_observable(model.lattice(), sim.particles());
  });
  Accumulator acc;
  for (double v : vals) acc.add(v);
  return acc;
}

SpreadReport spread_estimator(const ModelSpec& model, const DualConfiguration& xi,
                              const DualConfiguration& xi2, const std::vector<double>& t_grid,
                              long replicas, std::uint64_t seed, int workers) {
  for (size_t j = 1; j < t_grid.size(); ++j)
    if (t_grid[j] < t_grid[j - 1])
      throw std::invalid_argument("spread_estimator: t grid must be nondecreasing");
  if (!t_grid.empty()) {
    double rate = model.max_channel_rate();
    if (model.s() != 0) rate *= model.alpha();
    double window = static_cast<double>(model.lattice().side()) /
                    (4.0 * std::max(1, model.max_jump_range()) * std::max(rate, 1e-300));
    if (t_grid.back() > window)
      throw std::invalid_argument("spread_estimator: horizon exceeds the torus safe window");
  }

  const auto& lat = model.lattice();
  std::vector<char> in_support(lat.num_sites(), 0);
  for (const auto& p : xi2.particles) in_support[lat.index_of(p)] = 1;

  const size_t G = t_grid.size();
  std::vector<std::vector<char>> disjoint(G, std::vector<char>(replicas));
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    LabeledSimulator sim(model, xi.particles, model.s() == 0);
    for (size_t j = 0; j < G; ++j) {
      sim.run_until(t_grid[j], rng);
      bool dj = true;
      for (const auto& p : sim.particles())
        if (in_support[lat.index_of(p)]) {
          dj = false;
          break;
        }
      disjoint[j][i] = dj ? 1 : 0;
    }
  });

  SpreadReport rep;
  rep.t_grid = t_grid;
  rep.replicas = replicas;
  for (size_t j = 0; j < G; ++j) {
    long hit = 0;
    for (long i = 0; i < replicas; ++i) hit += disjoint[j][i];
    double p = static_cast<double>(hit) / static_cast<double>(replicas);
    rep.p_disjoint.push_back(p);
    rep.se.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(replicas)));
  }
  return rep;
}

}  // namespace mlps
