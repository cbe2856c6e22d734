#include "mlps/duality.hpp"

#include <cmath>
#include <stdexcept>

#include "mlps/engine.hpp"
#include "mlps/kernel.hpp"
#include "mlps/parallel.hpp"
#include "mlps/rng.hpp"
#include "mlps/stats.hpp"

namespace mlps {

double single_site_weight(int s, double alpha, long k, long n) {
  if (k < 0 || n < 0) throw std::invalid_argument("single_site_weight: negative occupation");
  if (s == -1 && static_cast<double>(k) > alpha)
    throw std::invalid_argument("single_site_weight: k > alpha for the exclusion weight");
  if (k > n) return 0.0;
  double w = 1.0;
  for (long i = 0; i < k; ++i) {
    double num = static_cast<double>(n - i);
    switch (s) {
      case -1: w *= num / (alpha - static_cast<double>(i)); break;
      case  0: w *= num; break;
      case +1: w *= num / (alpha + static_cast<double>(i)); break;
      default: throw std::invalid_argument("single_site_weight: s must be -1, 0 or +1");
    }
  }
  return w;
}

double duality_value(const ModelSpec& model, const Configuration& xi, const Configuration& eta) {
  double prod = 1.0;
  for (size_t v = 0; v < xi.n.size(); ++v)
    if (xi.n[v] > 0) prod *= single_site_weight(model.s(), model.alpha(), xi.n[v], eta.n[v]);
  return prod;
}

double duality_value(const ModelSpec& model, const DualConfiguration& xi,
                     const Configuration& eta) {
  // group the labeled particles by site without materializing a full lattice
  const auto& lat = model.lattice();
  std::vector<std::pair<long, int>> counts;
  for (const auto& p : xi.particles) {
    long idx = lat.index_of(p);
    bool found = false;
    for (auto& [site, k] : counts)
      if (site == idx) {
        ++k;
        found = true;
      }
    if (!found) counts.emplace_back(idx, 1);
  }
  double prod = 1.0;
  for (const auto& [site, k] : counts)
    prod *= single_site_weight(model.s(), model.alpha(), k, eta.n[site]);
  return prod;
}

namespace {

DualityReport make_report(const std::vector<double>& lhs, const std::vector<double>& rhs) {
  Accumulator la, ra;
  for (double x : lhs) la.add(x);
  for (double x : rhs) ra.add(x);
  DualityReport rep;
  rep.lhs_mean = la.mean();
  rep.rhs_mean = ra.mean();
  rep.lhs_se = la.se();
  rep.rhs_se = ra.se();
  rep.z = z_score(rep.lhs_mean, rep.lhs_se, rep.rhs_mean, rep.rhs_se);
  rep.replicas = static_cast<long>(lhs.size());
  return rep;
}

}  // namespace

DualityReport mc_duality_check(const ModelSpec& model, const DualConfiguration& xi,
                               const Configuration& eta, double t, long replicas,
                               std::uint64_t seed, int workers) {
  if (t < 0) throw std::invalid_argument("mc_duality_check: negative time");
  std::vector<double> lhs(replicas), rhs(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rf(seed, 2 * static_cast<std::uint64_t>(i));
    ForwardSimulator fs(model, eta);
    fs.run_until(t, rf);
    lhs[i] = duality_value(model, xi, fs.state());

    RngStream rd(seed, 2 * static_cast<std::uint64_t>(i) + 1);
    LabeledSimulator ds(model, xi.particles, model.s() == 0);
    ds.run_until(t, rd);
    rhs[i] = duality_value(model, ds.dual_configuration(), eta);
  });
  return make_report(lhs, rhs);
}

DualityReport mc_deterministic_duality_check(const ModelSpec& model,
                                             const std::vector<double>& f,
                                             const Configuration& eta, double t, long replicas,
                                             std::uint64_t seed, int workers) {
  if (model.s() != 0)
    throw std::invalid_argument("mc_deterministic_duality_check: requires s = 0");
  const long N = model.lattice().num_sites();
  if (static_cast<long>(f.size()) != N)
    throw std::invalid_argument("mc_deterministic_duality_check: profile size mismatch");
  for (double x : f)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("mc_deterministic_duality_check: f must lie in [0, 1]");

  auto product_value = [&](const Configuration& cfg) {
    double p = 1.0;
    for (long v = 0; v < N; ++v)
      for (int j = 0; j < cfg.n[v]; ++j) p *= f[v];
    return p;
  };

  std::vector<double> lhs(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    ForwardSimulator fs(model, eta);
    fs.run_until(t, rng);
    lhs[i] = product_value(fs.state());
  });

  Eigen::MatrixXd pt = single_particle_kernel(model, t, false);
  double rhs = 1.0;
  for (long v = 0; v < N; ++v) {
    if (eta.n[v] == 0) continue;
    double fv = 0.0;
    for (long w = 0; w < N; ++w) fv += pt(v, w) * f[w];
    for (int j = 0; j < eta.n[v]; ++j) rhs *= fv;
  }

  Accumulator la;
  for (double x : lhs) la.add(x);
  DualityReport rep;
  rep.lhs_mean = la.mean();
  rep.lhs_se = la.se();
  rep.rhs_mean = rhs;
  rep.rhs_se = 0.0;
  rep.z = z_score(rep.lhs_mean, rep.lhs_se, rep.rhs_mean, rep.rhs_se);
  rep.replicas = replicas;
  return rep;
}

}  // namespace mlps
