#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace mlps {

// A lattice point together with its layer. Positions are kept in canonical
// (wrapped) form, each coordinate in [0, L).
struct Site {
  std::vector<int> x;
  int layer = 0;

  friend bool operator==(const Site&, const Site&) = default;
};

// Periodic torus (Z mod L)^d crossed with a finite layer set. Site indices
// are layer-major: index = layer * L^d + sum_k x[k] * L^k, so a fixed layer
// occupies a contiguous index range.
class Lattice {
 public:
  Lattice(int d, int L, int num_layers) : d_(d), L_(L), layers_(num_layers) {
    if (d <= 0) throw std::invalid_argument("Lattice: dimension must be positive");
    if (L <= 0) throw std::invalid_argument("Lattice: side length must be positive");
    if (num_layers <= 0) throw std::invalid_argument("Lattice: layer count must be positive");
    vol_ = 1;
    for (int k = 0; k < d_; ++k) vol_ *= L_;
  }

  int dim() const { return d_; }
  int side() const { return L_; }
  int layers() const { return layers_; }
  long volume() const { return vol_; }
  long num_sites() const { return vol_ * layers_; }

  std::vector<int> wrap(std::vector<int> x) const {
    if (static_cast<int>(x.size()) != d_)
      throw std::invalid_argument("wrap: dimension mismatch");
    for (auto& c : x) {
      c %= L_;
      if (c < 0) c += L_;
    }
    return x;
  }

  Site canonical(Site s) const {
    s.x = wrap(std::move(s.x));
    if (s.layer < 0 || s.layer >= layers_)
      throw std::out_of_range("canonical: layer out of range");
    return s;
  }

  Site displace(const Site& s, const std::vector<int>& u) const {
    if (static_cast<int>(u.size()) != d_)
      throw std::invalid_argument("displace: dimension mismatch");
    Site out = s;
    for (int k = 0; k < d_; ++k) out.x[k] += u[k];
    out.x = wrap(std::move(out.x));
    return out;
  }

  long index_of(const Site& s) const {
    if (s.layer < 0 || s.layer >= layers_)
      throw std::out_of_range("index_of: layer out of range");
    long pos = 0;
    long stride = 1;
    for (int k = 0; k < d_; ++k) {
      if (s.x[k] < 0 || s.x[k] >= L_)
        throw std::out_of_range("index_of: position not canonical");
      pos += static_cast<long>(s.x[k]) * stride;
      stride *= L_;
    }
    return static_cast<long>(s.layer) * vol_ + pos;
  }

  Site site_at(long idx) const {
    if (idx < 0 || idx >= num_sites()) throw std::out_of_range("site_at: index out of range");
    Site s;
    s.layer = static_cast<int>(idx / vol_);
    long pos = idx % vol_;
    s.x.resize(d_);
    for (int k = 0; k < d_; ++k) {
      s.x[k] = static_cast<int>(pos % L_);
      pos /= L_;
    }
    return s;
  }

  // Per-coordinate representative of (to - from) mod L in (-L/2, L/2].
  std::vector<int> min_displacement(const Site& from, const Site& to) const {
    std::vector<int> u(d_);
    for (int k = 0; k < d_; ++k) {
      int r = (to.x[k] - from.x[k]) % L_;
      if (r < 0) r += L_;
      if (2 * r > L_) r -= L_;
      u[k] = r;
    }
    return u;
  }

  // Torus L1 distance between positions (layers ignored).
  int l1_distance(const Site& a, const Site& b) const {
    int dist = 0;
    for (int k = 0; k < d_; ++k) {
      int r = (a.x[k] - b.x[k]) % L_;
      if (r < 0) r += L_;
      dist += std::min(r, L_ - r);
    }
    return dist;
  }

 private:
  int d_, L_, layers_;
  long vol_;
};

}  // namespace mlps
