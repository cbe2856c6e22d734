#include <doctest.h>

#include "helpers.hpp"
#include "mlps/exactcheck.hpp"

using namespace mlps;
using testutil::nn_kinetics;

namespace {

ModelSpec small_rtp(int L = 4) {
  Lattice lat(1, L, 2);
  LayerKinetics kin = nn_kinetics(1, 2, 0.5, 1.0);
  kin.kappa = 0.8;
  kin.lambda = 1.2;
  kin.velocity = {{1}, {-1}};
  return ModelSpec(0, 1.0, kin, lat);
}

}  // namespace

TEST_CASE("sector enumeration sizes and indexing") {
  Lattice lat(1, 3, 1);
  auto free2 = SectorSpace::fixed_count(lat, 2, -1);
  CHECK(free2.size() == 6);  // multisets of size 2 from 3 sites
  auto excl2 = SectorSpace::fixed_count(lat, 2, 1);
  CHECK(excl2.size() == 3);
  auto full = SectorSpace::bounded_full(lat, 1);
  CHECK(full.size() == 8);
  for (long i = 0; i < full.size(); ++i) CHECK(full.index_of(full.config(i)) == i);
  CHECK_THROWS_AS(full.index_of(Configuration{{2, 0, 0}}), std::out_of_range);

  auto zero = SectorSpace::fixed_count(lat, 0, -1);
  CHECK(zero.size() == 1);
}

TEST_CASE("build_generator gives the circulant walk matrix") {
  Lattice lat(1, 3, 1);
  LayerKinetics kin = nn_kinetics(1, 1, 0.5, 0.0);
  kin.kappa = 1.0;
  ModelSpec m(0, 1.0, kin, lat);
  auto space = SectorSpace::fixed_count(lat, 1, -1);
  auto G = build_generator(m, space);
  CHECK(G.max_row_sum_residual() <= 1e-12);
  for (long i = 0; i < space.size(); ++i) {
    double diag = 0.0;
    int offs = 0;
    for (const auto& [j, q] : G.rows[i]) {
      if (j == i)
        diag = q;
      else {
        CHECK(q == doctest::Approx(0.5));
        ++offs;
      }
    }
    CHECK(offs == 2);
    CHECK(diag == doctest::Approx(-1.0));
  }
}

TEST_CASE("generator-level duality residual") {
  SUBCASE("plain independent walkers") {
    Lattice lat(1, 4, 2);
    LayerKinetics kin = nn_kinetics(1, 2, 0.5, 1.0);
    kin.kappa = 1.0;
    ModelSpec m(0, 1.0, kin, lat);
    CHECK(exact_generator_duality_residual(m, 1, {1, 2}) <= 1e-10);
  }
  SUBCASE("run-and-tumble with reversal") {
    CHECK(exact_generator_duality_residual(small_rtp(), 2, {1, 2}) <= 1e-10);
  }
  SUBCASE("negative control: a perturbed rate is detected") {
    Lattice lat(1, 4, 2);
    ModelSpec m(-1, 1.0, nn_kinetics(1, 2, 0.5, 1.0), lat);
    CHECK(exact_generator_duality_residual(m, 1, {1, 2}, 1e-3) >= 1e-4);
  }
}

TEST_CASE("exclusion stationarity residual") {
  Lattice lat(1, 3, 2);
  ModelSpec m(-1, 1.0, nn_kinetics(1, 2, 0.5, 1.0), lat);
  CHECK(exact_stationarity_residual(m, {-1, 0.5, 1.0}) <= 1e-10);
  CHECK(exact_stationarity_residual(m, {-1, 0.0, 1.0}) == 0.0);
  CHECK(exact_stationarity_residual(m, {-1, 1.0, 1.0}) == 0.0);
  ModelSpec sip(+1, 1.0, nn_kinetics(1, 2, 0.5, 1.0), lat);
  CHECK_THROWS_AS(exact_stationarity_residual(sip, {+1, 0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("D-transform constancy over sectors") {
  Lattice lat(1, 4, 2);
  ModelSpec sep(-1, 2.0, nn_kinetics(1, 2, 0.5, 1.0), lat);
  CHECK(exact_dtransform_constancy(sep, 1, {-1, 0.5, 2.0}) <= 1e-10);
  CHECK(exact_dtransform_constancy(sep, 2, {-1, 0.5, 2.0}) <= 1e-10);
  ModelSpec rtp = small_rtp();
  CHECK(exact_dtransform_constancy(rtp, 3, {0, 0.7, 1.0}) <= 1e-10);
}

TEST_CASE("ladder projection and intertwining") {
  Lattice lat(1, 3, 1);
  CHECK(ladder_project(lat, 2, {1, 1, 0, 0, 0, 1}).n == std::vector<int>{2, 0, 1});
  CHECK_THROWS_AS(ladder_project(lat, 2, {1, 0}), std::invalid_argument);

  ModelSpec sep1(-1, 1.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
  CHECK(exact_ladder_consistency(sep1) <= 1e-12);  // alpha = 1: the lift is trivial

  ModelSpec sep2(-1, 2.0, nn_kinetics(1, 1, 0.5, 0.0), lat);
  CHECK(exact_ladder_consistency(sep2) <= 1e-10);
}
