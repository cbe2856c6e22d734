#pragma once

#include <numeric>
#include <vector>

#include "mlps/lattice.hpp"

namespace mlps {

// Occupation numbers eta_v indexed by site index.
struct Configuration {
  std::vector<int> n;

  long total() const { return std::accumulate(n.begin(), n.end(), 0L); }

  static Configuration empty(const Lattice& lat) {
    return Configuration{std::vector<int>(lat.num_sites(), 0)};
  }
};

// Finite labeled particle list; the occupancy view xi_v is derived.
struct DualConfiguration {
  std::vector<Site> particles;

  Configuration occupancy(const Lattice& lat) const {
    Configuration c = Configuration::empty(lat);
    for (const auto& p : particles) ++c.n[lat.index_of(p)];
    return c;
  }
};

}  // namespace mlps
