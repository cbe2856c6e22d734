#include "mlps/kernel.hpp"

#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace mlps {

Eigen::MatrixXd single_particle_generator(const ModelSpec& model, bool reversed, long site_cap) {
  const long N = model.lattice().num_sites();
  if (N > site_cap) throw std::runtime_error("single_particle_generator: site cap exceeded");
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
  for (long v = 0; v < N; ++v) {
    for (const auto& [w, base] : model.site_targets(v, reversed)) {
      double r = base * model.alpha();  // one particle: eta_v (alpha + s*0)
      Q(v, w) += r;
      Q(v, v) -= r;
    }
  }
  return Q;
}

Eigen::MatrixXd single_particle_kernel(const ModelSpec& model, double t, bool reversed,
                                       long site_cap) {
  if (t < 0) throw std::invalid_argument("single_particle_kernel: negative time");
  Eigen::MatrixXd Q = single_particle_generator(model, reversed, site_cap);
  return (t * Q).exp();
}

}  // namespace mlps
