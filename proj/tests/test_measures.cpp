#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mlps/measures.hpp"
#include "mlps/stats.hpp"

using namespace mlps;
using testutil::nn_kinetics;
using testutil::site1;

TEST_CASE("site_pmf closed-form values") {
  CHECK(site_pmf({-1, 0.5, 2.0}, 1) == doctest::Approx(0.5));
  CHECK(site_pmf({+1, 0.5, 1.0}, 2) == doctest::Approx(0.125));
  CHECK(site_pmf({0, 1.0, 1.0}, 0) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(site_pmf({-1, 1.5, 2.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(site_pmf({+1, 1.0, 1.0}, 0), std::invalid_argument);
}

TEST_CASE("pmf sums to one") {
  double acc = 0.0;
  for (long n = 0; n <= 3; ++n) acc += site_pmf({-1, 0.3, 3.0}, n);
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));
  acc = 0.0;
  for (long n = 0; n < 200; ++n) acc += site_pmf({+1, 0.4, 2.5}, n);
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("theta values") {
  CHECK(theta({-1, 0.3, 2.0}) == doctest::Approx(0.3));
  CHECK(theta({+1, 0.5, 1.0}) == doctest::Approx(1.0));
  CHECK(theta({0, 0.0, 1.0}) == 0.0);
}

TEST_CASE("exact D-transform equals theta^k") {
  CHECK(exact_dtransform_site({-1, 0.5, 2.0}, 2) == doctest::Approx(0.25));
  CHECK(exact_dtransform_site({0, 0.7, 1.0}, 2) == doctest::Approx(0.49));
  for (int s : {-1, 0, 1}) {
    ProductMeasure m{s, 0.4, 2.0};
    CHECK(exact_dtransform_site(m, 0) == 1.0);
    long kmax = (s == -1) ? 2 : 4;
    for (long k = 1; k <= kmax; ++k)
      CHECK(std::abs(exact_dtransform_site(m, k) -
                     std::pow(theta(m), static_cast<double>(k))) <= 1e-10);
  }
}

TEST_CASE("sampler hits the closed-form mean") {
  Lattice lat(1, 8, 1);
  struct Case {
    ProductMeasure m;
    double mean;
  };
  for (const auto& c : {Case{{-1, 0.4, 2.0}, 0.8}, Case{{+1, 0.5, 1.5}, 1.5},
                        Case{{0, 0.9, 1.0}, 0.9}}) {
    SiteSampler sampler(c.m);
    Accumulator acc;
    RngStream rng(17, 0);
    for (long i = 0; i < 40000; ++i) acc.add(static_cast<double>(sampler.sample(rng)));
    CHECK(z_score(acc.mean(), acc.se(), c.mean, 0.0) <= 4.0);
  }
}

TEST_CASE("degenerate densities") {
  Lattice lat(1, 6, 1);
  RngStream rng(1, 0);
  CHECK(sample_configuration({0, 0.0, 1.0}, lat, rng).total() == 0);
  auto full = sample_configuration({-1, 1.0, 2.0}, lat, rng);
  for (int n : full.n) CHECK(n == 2);
}

TEST_CASE("mc_invariance_check at t = 0 matches theta^|xi|") {
  Lattice lat(1, 4, 2);
  ModelSpec m(-1, 2.0, nn_kinetics(1, 2, 0.5, 1.0), lat);
  DualConfiguration xi{{site1(0, 0), site1(2, 1)}};
  auto rep = mc_invariance_check(m, {-1, 0.5, 2.0}, xi, 0.0, 20000, 23, 2);
  CHECK(rep.rhs_mean == doctest::Approx(0.25));
  CHECK(rep.z <= 4.0);

  auto trivial = mc_invariance_check(m, {-1, 0.5, 2.0}, DualConfiguration{}, 1.0, 100, 23, 1);
  CHECK(trivial.lhs_mean == 1.0);
  CHECK(trivial.rhs_mean == 1.0);
}

TEST_CASE("mixing estimator sanity") {
  Lattice lat(1, 6, 1);
  LayerKinetics kin = nn_kinetics(1, 1, 0.5, 0.0);
  kin.kappa = 1.0;
  ModelSpec m(0, 1.0, kin, lat);
  ProductMeasure mu{0, 0.8, 1.0};
  DualConfiguration xi{{site1(2)}};

  SUBCASE("t = 0 self-covariance is the Poisson variance") {
    auto series = mixing_estimator(m, mu, xi, xi, {0.0}, 40000, 31, 2);
    REQUIRE(series.size() == 1);
    CHECK(z_score(series[0].value, series[0].se, 0.8, 0.0) <= 4.0);
  }
  SUBCASE("empty observable has zero covariance") {
    auto series = mixing_estimator(m, mu, DualConfiguration{}, xi, {0.0, 0.5}, 200, 31, 1);
    for (const auto& pt : series) CHECK(pt.value == doctest::Approx(0.0));
  }
  SUBCASE("grid must be sorted") {
    CHECK_THROWS_AS(mixing_estimator(m, mu, xi, xi, {1.0, 0.5}, 10, 31, 1),
                    std::invalid_argument);
  }
}
