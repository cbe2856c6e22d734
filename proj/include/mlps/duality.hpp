#pragma once

#include <cstdint>
#include <vector>

#include "mlps/model.hpp"
#include "mlps/state.hpp"

namespace mlps {

// Two-sided Monte-Carlo estimate of a duality identity.
struct DualityReport {
  double lhs_mean = 0.0;
  double rhs_mean = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double z = 0.0;
  long replicas = 0;
};

// Single-site duality weight d_s(k, n):
//   s = -1 : prod_{i<k} (n - i) / (alpha - i), zero for k > n, error for k > alpha
//   s = +1 : prod_{i<k} (n - i) / (alpha + i), zero for k > n
//   s =  0 : prod_{i<k} (n - i),              zero for k > n
// Computed as running products; no large factorials.
double single_site_weight(int s, double alpha, long k, long n);

// D_s(xi, eta) = prod over occupied dual sites of d_s(xi_v, eta_v).
double duality_value(const ModelSpec& model, const DualConfiguration& xi,
                     const Configuration& eta);
double duality_value(const ModelSpec& model, const Configuration& xi, const Configuration& eta);

// Estimates E_eta[D(xi, eta(t))] from forward replicas and E_xi[D(xi(t), eta)]
// from dual replicas, and reports the two-sample z statistic.
DualityReport mc_duality_check(const ModelSpec& model, const DualConfiguration& xi,
                               const Configuration& eta, double t, long replicas,
                               std::uint64_t seed, int workers = 1);

// Deterministic-system duality for s = 0: the left side is the Monte-Carlo
// average of prod_v f(v)^{eta_v(t)}, the right side prod_v f_t(v)^{eta_v}
// with f_t computed from the matrix-exponential kernel (rhs_se = 0).
DualityReport mc_deterministic_duality_check(const ModelSpec& model,
                                             const std::vector<double>& f,
                                             const Configuration& eta, double t, long replicas,
                                             std::uint64_t seed, int workers = 1);

}  // namespace mlps
