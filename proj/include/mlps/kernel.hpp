#pragma once

#include <Eigen/Dense>

#include "mlps/model.hpp"

namespace mlps {

// Single-particle transition kernel p_t(v, w) on small lattices, computed by
// exponentiating the one-particle rate matrix. Throws when the site count
// exceeds the cap.
Eigen::MatrixXd single_particle_kernel(const ModelSpec& model, double t, bool reversed = false,
                                       long site_cap = 2048);

// One-particle generator matrix (rows sum to zero).
Eigen::MatrixXd single_particle_generator(const ModelSpec& model, bool reversed = false,
                                          long site_cap = 2048);

}  // namespace mlps
