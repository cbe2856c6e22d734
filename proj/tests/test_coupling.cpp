#include <doctest.h>

#include "helpers.hpp"
#include "mlps/coupling.hpp"
#include "mlps/kernel.hpp"

using namespace mlps;
using testutil::nn_kinetics;
using testutil::site1;

namespace {

ModelSpec irw_model(int d, int L) {
  Lattice lat(d, L, 2);
  LayerKinetics kin = nn_kinetics(d, 2, 0.5 / d, 1.0);
  kin.kappa = 1.0;
  return ModelSpec(0, 1.0, kin, lat);
}

ModelSpec rtp_model(double kappa, double lambda, int L = 8) {
  Lattice lat(1, L, 2);
  LayerKinetics kin = nn_kinetics(1, 2, 0.5, 1.0);
  if (kappa == 0.0) kin.pi = {{}, {}};
  kin.kappa = kappa;
  kin.lambda = lambda;
  kin.velocity = {{1}, {-1}};
  return ModelSpec(0, 1.0, kin, lat);
}

}  // namespace

TEST_CASE("velocity basis selection") {
  CHECK(select_velocity_basis(rtp_model(0.0, 1.0)) == std::vector<int>{0});

  Lattice lat(1, 8, 2);
  LayerKinetics kin = nn_kinetics(1, 2, 0.0, 1.0);
  kin.pi = {{}, {}};
  kin.lambda = 1.0;
  kin.velocity = {{2}, {-2}};
  ModelSpec even(0, 1.0, kin, lat);
  CHECK_THROWS_AS(select_velocity_basis(even), SpanDeficient);

  CHECK_THROWS_AS(select_velocity_basis(irw_model(1, 8)), std::invalid_argument);
}

TEST_CASE("couple_internal") {
  ModelSpec m = irw_model(1, 8);
  RngStream rng(5, 0);
  auto same = couple_internal(m, 1, 1, 10.0, rng);
  CHECK(same.met);
  CHECK(same.varsigma == 0.0);

  long met = 0;
  for (long i = 0; i < 2000; ++i) {
    RngStream r(6, i);
    auto res = couple_internal(m, 0, 1, 5.0, r);
    if (res.met) {
      CHECK(res.varsigma <= 5.0);
      ++met;
    }
  }
  // two-state switch chain: the layer difference flips at rate 2, so
  // P(varsigma > 5) = exp(-10)
  CHECK(static_cast<double>(met) / 2000.0 >= 0.95);
}

TEST_CASE("pair coupling trivial and generic cases") {
  ModelSpec m = irw_model(1, 8);
  RngStream rng(7, 0);
  auto st = couple_irw_pair(m, site1(3, 1), site1(3, 1), 1.0, rng);
  CHECK(st.coupled);
  CHECK(st.tau == 0.0);

  long coupled = 0;
  for (long i = 0; i < 400; ++i) {
    RngStream r(8, i);
    auto s = couple_irw_pair(m, site1(0, 0), site1(2, 0), 200.0, r);
    if (s.coupled) {
      CHECK(s.internal_synced);
      CHECK(s.varsigma <= s.tau);
      CHECK(s.a == s.b);
      ++coupled;
    }
  }
  CHECK(static_cast<double>(coupled) / 400.0 >= 0.95);
}

TEST_CASE("config coupling matches labels pairwise") {
  ModelSpec m = irw_model(1, 8);
  RngStream rng(9, 0);
  std::vector<Site> xi = {site1(0, 0), site1(4, 1)};
  auto same = couple_irw_configs(m, xi, xi, 1.0, rng);
  CHECK(same.coupled);
  CHECK(same.tau == 0.0);
  CHECK_THROWS_AS(couple_irw_configs(m, xi, {site1(0, 0)}, 1.0, rng), std::invalid_argument);

  long coupled = 0;
  for (long i = 0; i < 200; ++i) {
    RngStream r(10, i);
    auto res = couple_irw_configs(m, {site1(0, 0), site1(4, 0)}, {site1(1, 0), site1(6, 1)},
                                  300.0, r);
    if (res.coupled) ++coupled;
  }
  CHECK(static_cast<double>(coupled) / 200.0 >= 0.9);
}

TEST_CASE("run-and-tumble couplings") {
  CouplingSchedule sched;
  sched.horizons = {50.0, 150.0, 400.0};

  SUBCASE("diffusive kappa > 0") {
    auto rep = couple_pair_mc(rtp_model(1.0, 1.0), site1(0, 0), site1(3, 1), sched, 300, 21, 2);
    CHECK(rep.fraction_coupled.back() >= 0.95);
    for (size_t j = 1; j < rep.fraction_coupled.size(); ++j)
      CHECK(rep.fraction_coupled[j] >= rep.fraction_coupled[j - 1]);
  }
  SUBCASE("ballistic kappa = 0") {
    auto rep = couple_pair_mc(rtp_model(0.0, 1.0), site1(0, 0), site1(3, 1), sched, 300, 22, 2);
    CHECK(rep.fraction_coupled.back() >= 0.95);
  }
}

TEST_CASE("interacting couplings") {
  CouplingSchedule sched;
  sched.horizons = {100.0, 400.0, 1500.0};

  SUBCASE("exclusion via the ladder lift") {
    Lattice lat(1, 6, 1);
    ModelSpec sep(-1, 2.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
    auto rep = couple_sep(sep, {site1(0), site1(3)}, {site1(1), site1(4)}, sched, 300, 31, 2);
    CHECK(rep.fraction_coupled.back() >= 0.95);
    for (size_t j = 1; j < rep.fraction_coupled.size(); ++j)
      CHECK(rep.fraction_coupled[j] >= rep.fraction_coupled[j - 1]);
  }
  SUBCASE("single particle routes through the pair coupling") {
    Lattice lat(1, 8, 1);
    ModelSpec sep(-1, 1.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
    auto rep = couple_sep(sep, {site1(0)}, {site1(3)}, sched, 200, 32, 2);
    CHECK(rep.fraction_coupled.back() >= 0.95);
  }
  SUBCASE("inclusion spread-and-retry") {
    Lattice lat(1, 12, 1);
    ModelSpec sip(+1, 1.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
    CouplingSchedule capped = sched;
    capped.initial_T = 4.0;
    capped.max_T = 32.0;  // attempts stay frequent on the torus
    auto rep = couple_sip(sip, {site1(0), site1(6)}, {site1(2), site1(8)}, capped, 200, 33, 2);
    CHECK(rep.fraction_coupled.back() >= 0.9);
  }
  SUBCASE("model-kind preconditions") {
    Lattice lat(1, 6, 1);
    ModelSpec sep(-1, 1.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
    CHECK_THROWS_AS(couple_sip(sep, {site1(0)}, {site1(1)}, sched, 10, 1, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("spread estimator") {
  Lattice lat(1, 31, 1);
  LayerKinetics kin = nn_kinetics(1, 1, 0.5, 0.0);
  kin.kappa = 1.0;
  ModelSpec m(0, 1.0, kin, lat);

  SUBCASE("trivial endpoints") {
    auto rep1 = spread_estimator(m, DualConfiguration{{site1(3)}}, DualConfiguration{},
                                 {0.0, 1.0}, 50, 41, 1);
    for (double p : rep1.p_disjoint) CHECK(p == 1.0);
    auto rep2 = spread_estimator(m, DualConfiguration{{site1(3)}},
                                 DualConfiguration{{site1(3)}}, {0.0}, 50, 41, 1);
    CHECK(rep2.p_disjoint[0] == 0.0);
  }
  SUBCASE("safe-window guard") {
    CHECK_THROWS_AS(spread_estimator(m, DualConfiguration{{site1(3)}},
                                     DualConfiguration{{site1(3)}}, {1000.0}, 10, 41, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("coupling report assembly") {
  std::vector<CouplingOutcome> outcomes(4);
  outcomes[0] = {true, 1.0, 0, 0.0, false};
  outcomes[1] = {true, 3.0, 1, 0.0, false};
  outcomes[2] = {false, -1.0, 2, 0.0, false};
  outcomes[3] = {true, 0.5, 0, 0.0, false};
  auto rep = assemble_coupling_report({2.0, 4.0}, outcomes);
  CHECK(rep.fraction_coupled[0] == doctest::Approx(0.5));
  CHECK(rep.fraction_coupled[1] == doctest::Approx(0.75));
  CHECK(rep.tau_q50 == doctest::Approx(1.0));
}
