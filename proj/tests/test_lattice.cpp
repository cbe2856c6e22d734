#include <doctest.h>

#include "mlps/lattice.hpp"

using namespace mlps;

TEST_CASE("wrap reduces coordinates into [0, L)") {
  Lattice l1(1, 5, 1);
  CHECK(l1.wrap({7}) == std::vector<int>{2});
  CHECK(l1.wrap({0}) == std::vector<int>{0});
  Lattice l2(2, 4, 1);
  CHECK(l2.wrap({-1, 4}) == std::vector<int>{3, 0});
  CHECK_THROWS_AS(l1.wrap({1, 2}), std::invalid_argument);
}

TEST_CASE("displace wraps and keeps the layer") {
  Lattice lat(1, 3, 2);
  Site s{{0}, 0};
  CHECK(lat.displace(s, {1}) == Site{{1}, 0});
  CHECK(lat.displace(Site{{2}, 1}, {1}) == Site{{0}, 1});
  CHECK(lat.displace(s, {0}) == s);
}

TEST_CASE("displacement is a group action") {
  Lattice lat(2, 5, 3);
  for (long i = 0; i < lat.num_sites(); ++i) {
    Site s = lat.site_at(i);
    for (std::vector<int> u : {std::vector<int>{1, 0}, {0, -2}, {2, 2}, {-1, 1}}) {
      std::vector<int> nu = u;
      for (auto& c : nu) c = -c;
      CHECK(lat.displace(lat.displace(s, u), nu) == s);
    }
  }
}

TEST_CASE("site/index round trip is the identity") {
  Lattice lat(2, 3, 2);
  CHECK(lat.num_sites() == 18);
  for (long i = 0; i < lat.num_sites(); ++i) CHECK(lat.index_of(lat.site_at(i)) == i);
}

TEST_CASE("min_displacement lands in (-L/2, L/2]") {
  Lattice lat(1, 6, 1);
  CHECK(lat.min_displacement(Site{{0}, 0}, Site{{5}, 0}) == std::vector<int>{-1});
  CHECK(lat.min_displacement(Site{{0}, 0}, Site{{3}, 0}) == std::vector<int>{3});
  CHECK(lat.min_displacement(Site{{2}, 0}, Site{{4}, 0}) == std::vector<int>{2});
}

TEST_CASE("torus L1 distance") {
  Lattice lat(2, 6, 1);
  CHECK(lat.l1_distance(Site{{0, 0}, 0}, Site{{5, 1}, 0}) == 2);
  CHECK(lat.l1_distance(Site{{1, 1}, 0}, Site{{1, 1}, 0}) == 0);
}

TEST_CASE("constructor rejects degenerate shapes") {
  CHECK_THROWS_AS(Lattice(0, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(Lattice(1, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(Lattice(1, 3, 0), std::invalid_argument);
}
