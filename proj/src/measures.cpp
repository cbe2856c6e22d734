#include "mlps/measures.hpp"

#include <cmath>
#include <stdexcept>

#include "mlps/engine.hpp"
#include "mlps/parallel.hpp"
#include "mlps/stats.hpp"

namespace mlps {

void validate_measure(const ProductMeasure& m) {
  switch (m.s) {
    case -1:
      if (m.alpha < 1 || m.alpha != std::floor(m.alpha))
        throw std::invalid_argument("measure: s=-1 requires integer alpha >= 1");
      if (!(m.rho >= 0.0 && m.rho <= 1.0))
        throw std::invalid_argument("measure: s=-1 requires rho in [0, 1]");
      break;
    case +1:
      if (!(m.alpha > 0)) throw std::invalid_argument("measure: s=+1 requires alpha > 0");
      if (!(m.rho >= 0.0 && m.rho < 1.0))
        throw std::invalid_argument("measure: s=+1 requires rho in [0, 1)");
      break;
    case 0:
      if (!(m.rho >= 0.0)) throw std::invalid_argument("measure: s=0 requires rho >= 0");
      break;
    default:
      throw std::invalid_argument("measure: s must be -1, 0 or +1");
  }
}

double site_pmf(const ProductMeasure& m, long n) {
  validate_measure(m);
  if (n < 0) throw std::invalid_argument("site_pmf: negative occupation");
  switch (m.s) {
    case -1: {
      long a = static_cast<long>(m.alpha);
      if (n > a) throw std::invalid_argument("site_pmf: n > alpha for s=-1");
      // binomial(alpha, rho) via running product
      double p = 1.0;
      for (long i = 0; i < n; ++i)
        p *= static_cast<double>(a - i) / static_cast<double>(i + 1) * m.rho;
      for (long i = 0; i < a - n; ++i) p *= (1.0 - m.rho);
      return p;
    }
    case +1: {
      // NegBin: Gamma(alpha+n)/(Gamma(alpha) n!) rho^n (1-rho)^alpha
      double p = std::pow(1.0 - m.rho, m.alpha);
      for (long i = 0; i < n; ++i)
        p *= (m.alpha + static_cast<double>(i)) / static_cast<double>(i + 1) * m.rho;
      return p;
    }
    default: {
      double p = std::exp(-m.rho);
      for (long i = 0; i < n; ++i) p *= m.rho / static_cast<double>(i + 1);
      return p;
    }
  }
}

double theta(const ProductMeasure& m) {
  validate_measure(m);
  switch (m.s) {
    case -1: return m.rho;
    case +1: return m.rho / (1.0 - m.rho);
    default: return m.rho;
  }
}

double exact_dtransform_site(const ProductMeasure& m, long k) {
  validate_measure(m);
  if (k < 0) throw std::invalid_argument("exact_dtransform_site: negative k");
  if (k == 0) return 1.0;
  if (m.s == -1) {
    long a = static_cast<long>(m.alpha);
    if (k > a) throw std::invalid_argument("exact_dtransform_site: k > alpha for s=-1");
    double acc = 0.0;
    for (long n = k; n <= a; ++n)
      acc += single_site_weight(m.s, m.alpha, k, n) * site_pmf(m, n);
    return acc;
  }
  // truncated series with an explicit tail check
  constexpr long kCap = 200000;
  double acc = 0.0;
  double mass = 0.0;
  long quiet = 0;
  for (long n = 0; n <= kCap; ++n) {
    double p = site_pmf(m, n);
    mass += p;
    if (n >= k) {
      double term = single_site_weight(m.s, m.alpha, k, n) * p;
      acc += term;
      if (term < 1e-16 * std::max(1.0, std::abs(acc)) && 1.0 - mass < 1e-13)
        ++quiet;
      else
        quiet = 0;
      if (quiet >= 5) return acc;
    }
  }
  throw std::runtime_error("exact_dtransform_site: truncation residual bound violated");
}

SiteSampler::SiteSampler(const ProductMeasure& m) {
  validate_measure(m);
  constexpr long kCap = 1 << 16;
  double acc = 0.0;
  long limit = (m.s == -1) ? static_cast<long>(m.alpha) : kCap;
  for (long n = 0; n <= limit; ++n) {
    acc += site_pmf(m, n);
    cdf_.push_back(acc);
    if (1.0 - acc < 1e-12 && m.s != -1) break;
  }
  if (1.0 - cdf_.back() > 1e-9)
    throw std::runtime_error("SiteSampler: tail mass cap exceeded");
  cdf_.back() = 1.0;  // absorb the residual tail into the last bin
}

long SiteSampler::sample(RngStream& rng) const {
  double u = rng.uniform();
  long lo = 0, hi = static_cast<long>(cdf_.size()) - 1;
  while (lo < hi) {
    long mid = (lo + hi) / 2;
    if (u < cdf_[mid])
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

Configuration sample_configuration(const ProductMeasure& m, const Lattice& lat, RngStream& rng) {
  SiteSampler sampler(m);
  Configuration cfg = Configuration::empty(lat);
  for (auto& n : cfg.n) n = static_cast<int>(sampler.sample(rng));
  return cfg;
}

DualityReport mc_invariance_check(const ModelSpec& model, const ProductMeasure& measure,
                                  const DualConfiguration& xi, double t, long replicas,
                                  std::uint64_t seed, int workers) {
  if (measure.s != model.s())
    throw std::invalid_argument("mc_invariance_check: measure kind does not match model");
  SiteSampler sampler(measure);
  const auto& lat = model.lattice();
  std::vector<double> lhs(replicas);
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    Configuration eta = Configuration::empty(lat);
    for (auto& n : eta.n) n = static_cast<int>(sampler.sample(rng));
    ForwardSimulator fs(model, std::move(eta));
    fs.run_until(t, rng);
    lhs[i] = duality_value(model, xi, fs.state());
  });
  Accumulator la;
  for (double x : lhs) la.add(x);
  DualityReport rep;
  rep.lhs_mean = la.mean();
  rep.lhs_se = la.se();
  rep.rhs_mean = std::pow(theta(measure), static_cast<double>(xi.particles.size()));
  rep.rhs_se = 0.0;
  rep.z = z_score(rep.lhs_mean, rep.lhs_se, rep.rhs_mean, rep.rhs_se);
  rep.replicas = replicas;
  return rep;
}

std::vector<SeriesPoint> mixing_estimator(const ModelSpec& model, const ProductMeasure& measure,
                                          const DualConfiguration& xi,
                                          const DualConfiguration& xi2,
                                          const std::vector<double>& t_grid, long replicas,
                                          std::uint64_t seed, int workers) {
  if (measure.s != model.s())
    throw std::invalid_argument("mixing_estimator: measure kind does not match model");
  for (size_t j = 1; j < t_grid.size(); ++j)
    if (t_grid[j] < t_grid[j - 1])
      throw std::invalid_argument("mixing_estimator: t grid must be nondecreasing");
  SiteSampler sampler(measure);
  const auto& lat = model.lattice();
  const size_t G = t_grid.size();

  std::vector<double> f0(replicas);
  std::vector<std::vector<double>> gt(G, std::vector<double>(replicas));
  parallel_for(replicas, workers, [&](long i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    Configuration eta = Configuration::empty(lat);
    for (auto& n : eta.n) n = static_cast<int>(sampler.sample(rng));
    f0[i] = duality_value(model, xi, eta);
    ForwardSimulator fs(model, std::move(eta));
    for (size_t j = 0; j < G; ++j) {
      fs.run_until(t_grid[j], rng);
      gt[j][i] = duality_value(model, xi2, fs.state());
    }
  });

  double fbar = 0.0;
  for (double x : f0) fbar += x;
  fbar /= static_cast<double>(replicas);

  std::vector<SeriesPoint> out;
  for (size_t j = 0; j < G; ++j) {
    double gbar = 0.0;
    for (double x : gt[j]) gbar += x;
    gbar /= static_cast<double>(replicas);
    Accumulator infl;  // influence values (f_i - fbar)(g_i - gbar)
    for (long i = 0; i < replicas; ++i) infl.add((f0[i] - fbar) * (gt[j][i] - gbar));
    out.push_back({t_grid[j], infl.mean(), infl.se()});
  }
  return out;
}

}  // namespace mlps
