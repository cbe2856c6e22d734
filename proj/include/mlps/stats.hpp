#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace mlps {

// Mergeable (count, sum, sum of squares) accumulator. Merging is associative,
// so replica-parallel reductions give the same result in any grouping as long
// as the element order is fixed.
struct Accumulator {
  long n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }

  void merge(const Accumulator& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }

  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }

  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }

  double se() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

inline double z_score(double m1, double se1, double m2, double se2) {
  double diff = std::abs(m1 - m2);
  if (diff == 0.0) return 0.0;
  double denom = std::sqrt(se1 * se1 + se2 * se2);
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return diff / denom;
}

}  // namespace mlps
