#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mlps/engine.hpp"
#include "mlps/kernel.hpp"
#include "mlps/stats.hpp"

using namespace mlps;
using testutil::nn_kinetics;
using testutil::site1;

TEST_CASE("enumerate_transitions matches hand enumeration") {
  Lattice lat(1, 6, 1);
  ModelSpec sep(-1, 1.0, nn_kinetics(1, 1, 0.5, 0.0), lat);

  Configuration eta = Configuration::empty(lat);
  SUBCASE("empty configuration") { CHECK(enumerate_transitions(sep, eta).empty()); }

  SUBCASE("isolated exclusion particle") {
    eta.n[2] = 1;
    auto tr = enumerate_transitions(sep, eta);
    REQUIRE(tr.size() == 2);
    for (const auto& t : tr) {
      CHECK(t.from == 2);
      CHECK(t.rate == doctest::Approx(0.5));
    }
  }

  SUBCASE("adjacent inclusion pair") {
    ModelSpec sip(+1, 1.0, nn_kinetics(1, 1, 0.25, 0.0), lat);
    eta.n[2] = 1;
    eta.n[3] = 1;
    auto tr = enumerate_transitions(sip, eta);
    double inward = 0.0, outward = 0.0;
    for (const auto& t : tr) {
      if ((t.from == 2 && t.to == 3) || (t.from == 3 && t.to == 2))
        inward += t.rate;
      else
        outward += t.rate;
    }
    CHECK(inward == doctest::Approx(2 * 0.25 * 1 * (1 + 1)));
    CHECK(outward == doctest::Approx(2 * 0.25 * 1 * 1));
  }
}

TEST_CASE("forward simulation conserves particles and is deterministic") {
  Lattice lat(1, 5, 2);
  ModelSpec m(+1, 1.5, nn_kinetics(1, 2, 0.5, 1.0), lat);
  Configuration eta = Configuration::empty(lat);
  eta.n[0] = 2;
  eta.n[7] = 1;

  RngStream r1(42, 0), r2(42, 0);
  ForwardSimulator a(m, eta), b(m, eta);
  long events = 0;
  a.run_until(3.0, r1, [&](const Event& e) {
    ++events;
    (void)e;
  });
  b.run_until(3.0, r2);
  CHECK(events > 0);
  CHECK(a.state().n == b.state().n);
  CHECK(a.state().total() == 3);
}

TEST_CASE("fully packed exclusion torus is absorbing") {
  Lattice lat(1, 4, 1);
  ModelSpec sep(-1, 2.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
  Configuration eta = Configuration::empty(lat);
  for (auto& n : eta.n) n = 2;
  ForwardSimulator fs(sep, eta);
  RngStream rng(1, 0);
  CHECK(fs.total_rate() == 0.0);
  CHECK_FALSE(fs.step(rng));
  fs.run_until(5.0, rng);
  CHECK(fs.time() == 5.0);
}

TEST_CASE("active jumps count as a Poisson process") {
  // single lambda-only run-and-tumble particle: events ~ Poisson(lambda T)
  Lattice lat(1, 64, 1);
  LayerKinetics kin;
  kin.pi = {{}};
  kin.c = {{0.0}};
  kin.lambda = 1.0;
  kin.velocity = {{1}};
  ModelSpec m(0, 1.0, kin, lat);

  const double T = 10.0;
  Accumulator counts;
  for (long i = 0; i < 2000; ++i) {
    RngStream rng(7, i);
    Configuration eta = Configuration::empty(lat);
    eta.n[0] = 1;
    ForwardSimulator fs(m, eta);
    long n = 0;
    fs.run_until(T, rng, [&](const Event&) { ++n; });
    counts.add(static_cast<double>(n));
  }
  CHECK(z_score(counts.mean(), counts.se(), T, 0.0) <= 4.0);
}

TEST_CASE("labeled and forward dynamics agree in law for one particle") {
  Lattice lat(1, 5, 2);
  ModelSpec m(-1, 2.0, nn_kinetics(1, 2, 0.5, 1.0), lat);
  Accumulator fwd, lab;
  auto obs = [&lat](const Site& s) {
    return std::cos(2.0 * M_PI * s.x[0] / lat.side()) + s.layer;
  };
  for (long i = 0; i < 4000; ++i) {
    RngStream r1(9, 2 * i), r2(9, 2 * i + 1);
    Configuration eta = Configuration::empty(lat);
    eta.n[0] = 1;
    ForwardSimulator fs(m, eta);
    fs.run_until(1.5, r1);
    for (long v = 0; v < lat.num_sites(); ++v)
      if (fs.state().n[v] > 0) fwd.add(obs(lat.site_at(v)));
    LabeledSimulator ls(m, {site1(0, 0)}, false);
    ls.run_until(1.5, r2);
    lab.add(obs(ls.particles()[0]));
  }
  CHECK(z_score(fwd.mean(), fwd.se(), lab.mean(), lab.se()) <= 4.0);
}

TEST_CASE("single-particle kernel properties") {
  Lattice lat(1, 6, 2);
  LayerKinetics kin = nn_kinetics(1, 2, 0.5, 1.0);
  kin.kappa = 0.7;
  kin.lambda = 1.3;
  kin.velocity = {{1}, {-1}};
  ModelSpec m(0, 1.0, kin, lat);

  SUBCASE("t = 0 gives the identity") {
    CHECK(single_particle_kernel(m, 0.0).isApprox(
        Eigen::MatrixXd::Identity(lat.num_sites(), lat.num_sites()), 1e-12));
  }
  SUBCASE("rows are stochastic") {
    auto p = single_particle_kernel(m, 1.7);
    for (long v = 0; v < lat.num_sites(); ++v)
      CHECK(p.row(v).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("forward/reversed transpose identity") {
    auto p = single_particle_kernel(m, 1.3, false);
    auto ph = single_particle_kernel(m, 1.3, true);
    CHECK((p - ph.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("site cap enforced") {
    CHECK_THROWS_AS(single_particle_kernel(m, 1.0, false, 4), std::runtime_error);
  }
}

TEST_CASE("one-particle SEP, SIP and IRW kernels coincide") {
  Lattice lat(1, 5, 1);
  ModelSpec sep(-1, 1.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
  ModelSpec sip(+1, 1.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
  LayerKinetics kin = nn_kinetics(1, 1, 0.5, 0.0);
  kin.kappa = 1.0;
  ModelSpec irw(0, 1.0, kin, lat);
  auto a = single_particle_kernel(sep, 0.8);
  auto b = single_particle_kernel(sip, 0.8);
  auto c = single_particle_kernel(irw, 0.8);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a - c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("simulate wrappers preserve counts") {
  Lattice lat(1, 5, 2);
  ModelSpec m(0, 1.0, [] {
    auto k = nn_kinetics(1, 2, 0.5, 1.0);
    k.kappa = 1.0;
    k.lambda = 0.5;
    k.velocity = {{1}, {-1}};
    return k;
  }(), lat);
  RngStream rng(3, 0);
  DualConfiguration xi{{site1(0, 0), site1(2, 1), site1(2, 1)}};
  auto out = simulate_dual(m, xi, 2.0, rng);
  CHECK(out.particles.size() == 3);
  Configuration eta = xi.occupancy(lat);
  auto eta2 = simulate(m, eta, 0.0, rng);
  CHECK(eta2.n == eta.n);
}
