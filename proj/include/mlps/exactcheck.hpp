#pragma once

#include <map>
#include <vector>

#include "mlps/measures.hpp"
#include "mlps/model.hpp"
#include "mlps/state.hpp"

namespace mlps {

// Enumeration of a finite configuration space with bijective indexing:
// either all configurations with a fixed particle count (dual sector), or
// all bounded-occupancy configurations (full SEP space).
class SectorSpace {
 public:
  static SectorSpace fixed_count(const Lattice& lat, int n, int max_per_site,
                                 long cap = 200000);
  static SectorSpace bounded_full(const Lattice& lat, int alpha, long cap = 200000);

  long size() const { return static_cast<long>(configs_.size()); }
  const Configuration& config(long i) const { return configs_[i]; }
  long index_of(const Configuration& c) const;

 private:
  std::vector<Configuration> configs_;
  std::map<std::vector<int>, long> index_;
};

// Sparse generator over a SectorSpace; off-diagonals are transition rates,
// the diagonal is minus the row sum.
struct GeneratorMatrix {
  const SectorSpace* space = nullptr;
  std::vector<std::vector<std::pair<long, double>>> rows;  // includes diagonal

  double max_row_sum_residual() const;
};

GeneratorMatrix build_generator(const ModelSpec& model, const SectorSpace& space,
                                bool reversed = false);

// max over (xi, eta) of |(L_dual D(., eta))(xi) - (L D(xi, .))(eta)| with xi
// ranging over the n-particle dual sector and eta over forward sectors with
// the given particle counts. forward_rate_bump perturbs the first enumerated
// forward rate (negative-control hook).
double exact_generator_duality_residual(const ModelSpec& model, int n,
                                        const std::vector<int>& forward_counts,
                                        double forward_rate_bump = 0.0);

// max over eta' of |sum_eta mu(eta) Q(eta, eta')| on the full SEP space.
double exact_stationarity_residual(const ModelSpec& model, const ProductMeasure& measure);

// max over xi in the n-particle sector of |mu_hat(xi) - theta^n|.
double exact_dtransform_constancy(const ModelSpec& model, int n, const ProductMeasure& measure);

// Projection from a ladder configuration on V x {1..alpha} (occupancies in
// {0,1}) down to the SEP configuration: eta(v) = sum_j eta'(v, j).
Configuration ladder_project(const Lattice& lat, int alpha, const std::vector<int>& ladder);

// Intertwining residual between the capacity-1 exclusion generator on the
// ladder space and the SEP generator under the rung-sum projection.
double exact_ladder_consistency(const ModelSpec& model, long cap = 1 << 20);

}  // namespace mlps
