#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mlps {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream assignment: identical (seed, stream) gives an
// identical draw sequence, distinct streams are statistically independent.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    std::uint64_t init[4];
    for (auto& w : init) w = splitmix64(s);
    std::seed_seq seq{init[0], init[1], init[2], init[3]};
    gen_.seed(seq);
  }

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double exponential(double rate) {
    double u;
    do { u = uniform(); } while (u == 0.0);
    return -std::log(u) / rate;
  }

  long uniform_int(long n) { return static_cast<long>(uniform() * static_cast<double>(n)) % n; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mlps
