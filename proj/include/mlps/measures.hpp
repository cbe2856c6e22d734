#pragma once

#include <cstdint>
#include <vector>

#include "mlps/duality.hpp"
#include "mlps/model.hpp"
#include "mlps/rng.hpp"
#include "mlps/state.hpp"

namespace mlps {

// Homogeneous product measure mu_{rho,s}: Binomial(alpha, rho) for s = -1,
// NegativeBinomial(alpha, rho) for s = +1, Poisson(rho) for s = 0.
struct ProductMeasure {
  int s = 0;
  double rho = 0.0;
  double alpha = 1.0;
};

void validate_measure(const ProductMeasure& m);

// Single-site mass function.
double site_pmf(const ProductMeasure& m, long n);

// theta = integral of d_s(1, eta_v) d mu: rho, rho/(1-rho), rho.
double theta(const ProductMeasure& m);

// Single-site D-transform integral of d_s(k, .), exact for s = -1 and
// truncated with tail bound < 1e-12 otherwise. Equals theta^k.
double exact_dtransform_site(const ProductMeasure& m, long k);

// Inversion sampler with a cached cumulative table (tail mass < 1e-12).
class SiteSampler {
 public:
  explicit SiteSampler(const ProductMeasure& m);
  long sample(RngStream& rng) const;

 private:
  std::vector<double> cdf_;
};

Configuration sample_configuration(const ProductMeasure& m, const Lattice& lat, RngStream& rng);

// Estimates E_mu[D(xi, eta(t))] by sampling eta ~ mu on the torus and
// evolving; the right side is the exact theta^{|xi|} (rhs_se = 0).
DualityReport mc_invariance_check(const ModelSpec& model, const ProductMeasure& measure,
                                  const DualConfiguration& xi, double t, long replicas,
                                  std::uint64_t seed, int workers = 1);

struct SeriesPoint {
  double t = 0.0;
  double value = 0.0;
  double se = 0.0;
};

// Empirical cov_mu(D(xi, .), S(t) D(xi2, .)) on a time grid.
std::vector<SeriesPoint> mixing_estimator(const ModelSpec& model, const ProductMeasure& measure,
                                          const DualConfiguration& xi,
                                          const DualConfiguration& xi2,
                                          const std::vector<double>& t_grid, long replicas,
                                          std::uint64_t seed, int workers = 1);

}  // namespace mlps
