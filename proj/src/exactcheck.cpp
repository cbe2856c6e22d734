#include "mlps/exactcheck.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "mlps/duality.hpp"
#include "mlps/engine.hpp"

namespace mlps {

namespace {

void enumerate_rec(std::vector<int>& cur, long site, long remaining, int max_per_site,
                   std::vector<Configuration>& out, long cap) {
  const long N = static_cast<long>(cur.size());
  if (site == N) {
    if (remaining == 0) {
      out.push_back(Configuration{cur});
      if (static_cast<long>(out.size()) > cap)
        throw std::runtime_error("SectorSpace: state cap exceeded");
    }
    return;
  }
  long hi = remaining;
  if (max_per_site >= 0) hi = std::min<long>(hi, max_per_site);
  // cheap prune: remaining particles must fit in the tail
  if (max_per_site >= 0 && remaining > hi + (N - site - 1) * static_cast<long>(max_per_site))
    return;
  for (long k = 0; k <= hi; ++k) {
    cur[site] = static_cast<int>(k);
    enumerate_rec(cur, site + 1, remaining - k, max_per_site, out, cap);
  }
  cur[site] = 0;
}

}  // namespace

SectorSpace SectorSpace::fixed_count(const Lattice& lat, int n, int max_per_site, long cap) {
  if (n < 0) throw std::invalid_argument("SectorSpace: negative particle count");
  SectorSpace sp;
  std::vector<int> cur(lat.num_sites(), 0);
  enumerate_rec(cur, 0, n, max_per_site, sp.configs_, cap);
  for (long i = 0; i < sp.size(); ++i) sp.index_[sp.configs_[i].n] = i;
  return sp;
}

SectorSpace SectorSpace::bounded_full(const Lattice& lat, int alpha, long cap) {
  if (alpha < 0) throw std::invalid_argument("SectorSpace: negative occupancy bound");
  const long N = lat.num_sites();
  double states = std::pow(static_cast<double>(alpha + 1), static_cast<double>(N));
  if (states > static_cast<double>(cap))
    throw std::runtime_error("SectorSpace: state cap exceeded");
  SectorSpace sp;
  std::vector<int> cur(N, 0);
  long total = static_cast<long>(states);
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (long v = 0; v < N; ++v) {
      cur[v] = static_cast<int>(c % (alpha + 1));
      c /= (alpha + 1);
    }
    sp.configs_.push_back(Configuration{cur});
  }
  for (long i = 0; i < sp.size(); ++i) sp.index_[sp.configs_[i].n] = i;
  return sp;
}

long SectorSpace::index_of(const Configuration& c) const {
  auto it = index_.find(c.n);
  if (it == index_.end()) throw std::out_of_range("SectorSpace: configuration not in space");
  return it->second;
}

double GeneratorMatrix::max_row_sum_residual() const {
  double worst = 0.0;
  for (const auto& row : rows) {
    double s = 0.0;
    for (const auto& [j, q] : row) s += q;
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

GeneratorMatrix build_generator(const ModelSpec& model, const SectorSpace& space, bool reversed) {
  GeneratorMatrix G;
  G.space = &space;
  G.rows.resize(space.size());
  const auto& lat = model.lattice();
  for (long i = 0; i < space.size(); ++i) {
    Configuration cfg = space.config(i);
    double diag = 0.0;
    for (const auto& tr : enumerate_transitions(model, cfg, reversed)) {
      Configuration next = cfg;
      --next.n[tr.from];
      ++next.n[tr.to];
      long j = space.index_of(next);
      G.rows[i].emplace_back(j, tr.rate);
      diag -= tr.rate;
    }
    G.rows[i].emplace_back(i, diag);
    (void)lat;
  }
  return G;
}

double exact_generator_duality_residual(const ModelSpec& model, int n,
                                        const std::vector<int>& forward_counts,
                                        double forward_rate_bump) {
  const auto& lat = model.lattice();
  int dual_cap = model.s() == -1 ? static_cast<int>(model.alpha()) : -1;
  SectorSpace dual = SectorSpace::fixed_count(lat, n, dual_cap);
  const bool dual_reversed = (model.s() == 0);

  double worst = 0.0;
  for (int m : forward_counts) {
    SectorSpace fwd = SectorSpace::fixed_count(lat, m, dual_cap);
    for (long xi_i = 0; xi_i < dual.size(); ++xi_i) {
      const Configuration& xi = dual.config(xi_i);
      auto dual_trans = enumerate_transitions(model, xi, dual_reversed);
      for (long eta_i = 0; eta_i < fwd.size(); ++eta_i) {
        const Configuration& eta = fwd.config(eta_i);
        double d0 = duality_value(model, xi, eta);

        double lhs = 0.0;
        for (const auto& tr : dual_trans) {
          Configuration xi2 = xi;
          --xi2.n[tr.from];
          ++xi2.n[tr.to];
          lhs += tr.rate * (duality_value(model, xi2, eta) - d0);
        }

        double rhs = 0.0;
        auto fwd_trans = enumerate_transitions(model, eta, false);
        if (forward_rate_bump != 0.0 && !fwd_trans.empty())
          fwd_trans.front().rate += forward_rate_bump;
        for (const auto& tr : fwd_trans) {
          Configuration eta2 = eta;
          --eta2.n[tr.from];
          ++eta2.n[tr.to];
          rhs += tr.rate * (duality_value(model, xi, eta2) - d0);
        }

        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  return worst;
}

double exact_stationarity_residual(const ModelSpec& model, const ProductMeasure& measure) {
  if (model.s() != -1 || measure.s != -1)
    throw std::invalid_argument("exact_stationarity_residual: SEP only");
  const auto& lat = model.lattice();
  SectorSpace space = SectorSpace::bounded_full(lat, static_cast<int>(model.alpha()));
  GeneratorMatrix G = build_generator(model, space);

  std::vector<double> mu(space.size());
  for (long i = 0; i < space.size(); ++i) {
    double p = 1.0;
    for (int occ : space.config(i).n) p *= site_pmf(measure, occ);
    mu[i] = p;
  }

  std::vector<double> res(space.size(), 0.0);
  for (long i = 0; i < space.size(); ++i)
    for (const auto& [j, q] : G.rows[i]) res[j] += mu[i] * q;

  double worst = 0.0;
  for (double r : res) worst = std::max(worst, std::abs(r));
  return worst;
}

double exact_dtransform_constancy(const ModelSpec& model, int n, const ProductMeasure& measure) {
  if (measure.s != model.s())
    throw std::invalid_argument("exact_dtransform_constancy: measure kind mismatch");
  const auto& lat = model.lattice();
  int cap = model.s() == -1 ? static_cast<int>(model.alpha()) : -1;
  SectorSpace sector = SectorSpace::fixed_count(lat, n, cap);

  std::vector<double> site_value(n + 1);
  for (int k = 0; k <= n; ++k)
    site_value[k] = (model.s() == -1 && k > measure.alpha)
                        ? 0.0  // unreachable: sector capped at alpha
                        : exact_dtransform_site(measure, k);

  double target = std::pow(theta(measure), static_cast<double>(n));
  double worst = 0.0;
  for (long i = 0; i < sector.size(); ++i) {
    double mu_hat = 1.0;
    for (int occ : sector.config(i).n)
      if (occ > 0) mu_hat *= site_value[occ];
    worst = std::max(worst, std::abs(mu_hat - target));
  }
  return worst;
}

Configuration ladder_project(const Lattice& lat, int alpha, const std::vector<int>& ladder) {
  if (static_cast<long>(ladder.size()) != lat.num_sites() * alpha)
    throw std::invalid_argument("ladder_project: size mismatch");
  Configuration out = Configuration::empty(lat);
  for (long v = 0; v < lat.num_sites(); ++v) {
    int sum = 0;
    for (int j = 0; j < alpha; ++j) sum += ladder[v * alpha + j];
    out.n[v] = sum;
  }
  return out;
}

double exact_ladder_consistency(const ModelSpec& model, long cap) {
  if (model.s() != -1) throw std::invalid_argument("exact_ladder_consistency: SEP only");
  const auto& lat = model.lattice();
  const int alpha = static_cast<int>(model.alpha());
  const long N = lat.num_sites();
  const long Nl = N * alpha;
  if (Nl >= 62 || (1L << Nl) > cap)
    throw std::runtime_error("exact_ladder_consistency: ladder space cap exceeded");

  SectorSpace sep = SectorSpace::bounded_full(lat, alpha);
  GeneratorMatrix Q = build_generator(model, sep);

  // dense SEP rows for lookup
  std::vector<std::vector<double>> Qd(sep.size(), std::vector<double>(sep.size(), 0.0));
  for (long i = 0; i < sep.size(); ++i)
    for (const auto& [j, q] : Q.rows[i]) Qd[i][j] += q;

  const long states = 1L << Nl;
  double worst = 0.0;
  std::vector<int> ladder(Nl);
  for (long mask = 0; mask < states; ++mask) {
    for (long b = 0; b < Nl; ++b) ladder[b] = static_cast<int>((mask >> b) & 1);
    Configuration proj = ladder_project(lat, alpha, ladder);
    long pi = sep.index_of(proj);

    // lumped row: per-rung-pair rate p(v,w) * eta'(v,j) * (1 - eta'(w,k))
    std::vector<double> lumped(sep.size(), 0.0);
    double diag = 0.0;
    for (long v = 0; v < N; ++v) {
      for (int j = 0; j < alpha; ++j) {
        if (!ladder[v * alpha + j]) continue;
        for (const auto& [w, base] : model.site_targets(v, false)) {
          for (int k = 0; k < alpha; ++k) {
            if (ladder[w * alpha + k]) continue;
            Configuration next = proj;
            --next.n[v];
            ++next.n[w];
            lumped[sep.index_of(next)] += base;
            diag -= base;
          }
        }
      }
    }
    lumped[pi] += diag;

    for (long j = 0; j < sep.size(); ++j)
      worst = std::max(worst, std::abs(lumped[j] - Qd[pi][j]));
  }
  return worst;
}

}  // namespace mlps
