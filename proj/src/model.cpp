#include "mlps/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace mlps {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::ostringstream os;
  os << "invalid model:";
  for (const auto& s : v) os << "\n  - " << s;
  return os.str();
}

bool negated(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != -b[i]) return false;
  return true;
}

bool is_zero(const std::vector<int>& u) {
  return std::all_of(u.begin(), u.end(), [](int c) { return c == 0; });
}

int linf(const std::vector<int>& u) {
  int m = 0;
  for (int c : u) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

ModelError::ModelError(std::vector<std::string> v)
    : std::invalid_argument(join(v)), violations(std::move(v)) {}

std::vector<std::string> ModelSpec::validate(int s, double alpha, const LayerKinetics& k,
                                             const Lattice& lat) {
  std::vector<std::string> errs;
  const int m = lat.layers();
  const int d = lat.dim();
  const int L = lat.side();

  if (s != -1 && s != 0 && s != 1) errs.push_back("kind s must be -1, 0 or +1");
  if (s == -1) {
    if (alpha < 1 || alpha != std::floor(alpha))
      errs.push_back("s=-1 requires alpha to be a positive integer");
  } else if (s == 1) {
    if (!(alpha > 0) || !std::isfinite(alpha)) errs.push_back("s=+1 requires alpha > 0");
  } else if (s == 0) {
    if (alpha != 1.0) errs.push_back("s=0 fixes alpha = 1");
  }

  if (static_cast<int>(k.pi.size()) != m)
    errs.push_back("pi must have one jump table per layer");
  for (int sig = 0; sig < std::min<int>(m, k.pi.size()); ++sig) {
    for (const auto& jr : k.pi[sig]) {
      if (static_cast<int>(jr.u.size()) != d) {
        errs.push_back("pi displacement of wrong dimension");
        continue;
      }
      if (is_zero(jr.u)) errs.push_back("pi displacement must be nonzero");
      if (!(jr.rate >= 0) || !std::isfinite(jr.rate)) errs.push_back("pi rate must be finite and >= 0");
      if (2 * linf(jr.u) >= L)
        errs.push_back("pi displacement magnitude must be < L/2 (torus wrap ambiguity)");
      // symmetry: the mirrored displacement must carry the same rate
      bool found = false;
      for (const auto& jr2 : k.pi[sig])
        if (negated(jr2.u, jr.u) && jr2.rate == jr.rate) found = true;
      if (!found) errs.push_back("pi_sigma must be symmetric: pi(u) = pi(-u)");
    }
    // reject duplicate entries for the same displacement
    for (size_t i = 0; i < k.pi[sig].size(); ++i)
      for (size_t j = i + 1; j < k.pi[sig].size(); ++j)
        if (k.pi[sig][i].u == k.pi[sig][j].u)
          errs.push_back("pi table has a duplicate displacement");
  }

  if (static_cast<int>(k.c.size()) != m) {
    errs.push_back("c must be an |S| x |S| matrix");
  } else {
    for (int a = 0; a < m; ++a) {
      if (static_cast<int>(k.c[a].size()) != m) {
        errs.push_back("c must be an |S| x |S| matrix");
        break;
      }
      if (k.c[a][a] != 0.0) errs.push_back("c must have zero diagonal");
      for (int b = 0; b < m; ++b) {
        if (!(k.c[a][b] >= 0) || !std::isfinite(k.c[a][b]))
          errs.push_back("c entries must be finite and >= 0");
        if (b < static_cast<int>(k.c.size()) && static_cast<int>(k.c[b].size()) == m &&
            k.c[a][b] != k.c[b][a])
          errs.push_back("c must be symmetric: c(a,b) = c(b,a)");
      }
    }
    // irreducibility of the switch graph
    if (m > 1 && errs.empty()) {
      std::vector<char> seen(m, 0);
      std::queue<int> q;
      q.push(0);
      seen[0] = 1;
      int count = 1;
      while (!q.empty()) {
        int a = q.front();
        q.pop();
        for (int b = 0; b < m; ++b)
          if (!seen[b] && k.c[a][b] > 0) {
            seen[b] = 1;
            ++count;
            q.push(b);
          }
      }
      if (count != m) errs.push_back("c must be irreducible (switch graph connected)");
    }
  }

  if (s == 0) {
    if (!(k.kappa >= 0) || !std::isfinite(k.kappa)) errs.push_back("kappa must be finite and >= 0");
    if (!(k.lambda >= 0) || !std::isfinite(k.lambda)) errs.push_back("lambda must be finite and >= 0");
    if (k.lambda > 0) {
      if (static_cast<int>(k.velocity.size()) != m) {
        errs.push_back("s=0 with lambda > 0 requires a velocity map with one vector per layer");
      } else {
        for (const auto& v : k.velocity) {
          if (static_cast<int>(v.size()) != d) errs.push_back("velocity vector of wrong dimension");
          else if (2 * linf(v) >= L)
            errs.push_back("velocity magnitude must be < L/2 (torus wrap ambiguity)");
        }
      }
    }
  }

  return errs;
}

ModelSpec::ModelSpec(int s, double alpha, LayerKinetics kinetics, Lattice lattice)
    : s_(s), alpha_(alpha), kinetics_(std::move(kinetics)), lattice_(std::move(lattice)) {
  auto errs = validate(s_, alpha_, kinetics_, lattice_);
  if (!errs.empty()) throw ModelError(std::move(errs));
  if (s_ != 0) {
    // kappa, lambda and velocities are RTP-only
    kinetics_.kappa = 0.0;
    kinetics_.lambda = 0.0;
    kinetics_.velocity.clear();
  }
  build_targets();
}

double ModelSpec::pair_rate(const Site& from, const Site& to, bool reversed) const {
  if (from == to) return 0.0;
  if (from.layer == to.layer) {
    auto u = lattice_.min_displacement(from, to);
    if (is_zero(u)) return 0.0;  // same position would mean a pure layer move
    double r = 0.0;
    for (const auto& jr : kinetics_.pi[from.layer])
      if (jr.u == u) r += (s_ == 0 ? kinetics_.kappa : 1.0) * jr.rate;
    if (s_ == 0 && kinetics_.lambda > 0) {
      const auto& v = kinetics_.velocity[from.layer];
      bool match = reversed ? negated(u, v) : (u == v);
      if (match) r += kinetics_.lambda;
    }
    return r;
  }
  if (from.x == to.x) return kinetics_.c[from.layer][to.layer];
  return 0.0;
}

double ModelSpec::transition_rate(const Configuration& eta, const Site& from,
                                  const Site& to) const {
  long vi = lattice_.index_of(from);
  long wi = lattice_.index_of(to);
  if (s_ == -1 && (eta.n[vi] > alpha_ || eta.n[wi] > alpha_))
    throw std::invalid_argument("transition_rate: SEP occupancy exceeds alpha");
  return pair_rate(from, to) * occupancy_factor(eta.n[vi], eta.n[wi]);
}

void ModelSpec::build_targets() {
  const long N = lattice_.num_sites();
  targets_fwd_.resize(N);
  targets_rev_.resize(N);
  for (long i = 0; i < N; ++i) {
    Site v = lattice_.site_at(i);
    // candidate targets from the stencil: pi support, active jump, switches
    std::vector<long> cand;
    for (const auto& jr : kinetics_.pi[v.layer])
      cand.push_back(lattice_.index_of(lattice_.displace(v, jr.u)));
    if (s_ == 0 && kinetics_.lambda > 0) {
      auto vel = kinetics_.velocity[v.layer];
      cand.push_back(lattice_.index_of(lattice_.displace(v, vel)));
      for (auto& c : vel) c = -c;
      cand.push_back(lattice_.index_of(lattice_.displace(v, vel)));
    }
    for (int b = 0; b < lattice_.layers(); ++b)
      if (kinetics_.c[v.layer][b] > 0) {
        Site w = v;
        w.layer = b;
        cand.push_back(lattice_.index_of(w));
      }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (long j : cand) {
      if (j == i) continue;
      Site w = lattice_.site_at(j);
      double rf = pair_rate(v, w, false);
      double rr = pair_rate(v, w, true);
      if (rf > 0) targets_fwd_[i].emplace_back(j, rf);
      if (rr > 0) targets_rev_[i].emplace_back(j, rr);
      int range = lattice_.l1_distance(v, w);
      if (rf > 0 || rr > 0) {
        max_channel_rate_ = std::max(max_channel_rate_, std::max(rf, rr));
        if (range > 0) max_jump_range_ = std::max(max_jump_range_, range);
      }
    }
  }
}

}  // namespace mlps
