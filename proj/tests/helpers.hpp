#pragma once

#include <vector>

#include "mlps/model.hpp"

namespace testutil {

// Nearest-neighbor jump tables with a common rate per direction and a
// complete layer-switch graph with a common switch rate.
inline mlps::LayerKinetics nn_kinetics(int d, int layers, double jump_rate,
                                       double switch_rate) {
  mlps::LayerKinetics k;
  for (int l = 0; l < layers; ++l) {
    std::vector<mlps::JumpRate> table;
    for (int a = 0; a < d; ++a) {
      std::vector<int> u(d, 0);
      u[a] = 1;
      table.push_back({u, jump_rate});
      u[a] = -1;
      table.push_back({u, jump_rate});
    }
    k.pi.push_back(std::move(table));
  }
  k.c.assign(layers, std::vector<double>(layers, switch_rate));
  for (int l = 0; l < layers; ++l) k.c[l][l] = 0.0;
  return k;
}

inline mlps::Site site1(int x, int layer = 0) { return mlps::Site{{x}, layer}; }

}  // namespace testutil
