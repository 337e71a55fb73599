#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pam {

inline constexpr int kMaxDim = 3;

enum class BoxKind { lattice, continuum };

// Centered box: lattice sites {z : |z_i| <= radius} or the continuum cube
// [-radius, radius]^dim. Lattice sites are enumerated lexicographically with
// axis 0 most significant (row-major); that order is the contract for stored
// field values and for RNG draw indices.
struct BoxSpec {
  int dim = 1;
  double radius = 0.0;
  BoxKind kind = BoxKind::lattice;

  static BoxSpec lattice_box(int dim, long radius) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("BoxSpec: dim must be 1..3");
    if (radius < 0) throw std::invalid_argument("BoxSpec: negative radius");
    return BoxSpec{dim, static_cast<double>(radius), BoxKind::lattice};
  }

  static BoxSpec continuum_box(int dim, double radius) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("BoxSpec: dim must be 1..3");
    if (!(radius >= 0)) throw std::invalid_argument("BoxSpec: negative radius");
    return BoxSpec{dim, radius, BoxKind::continuum};
  }

  long m() const {
    if (kind != BoxKind::lattice) throw std::logic_error("BoxSpec: lattice radius of a continuum box");
    return static_cast<long>(radius);
  }

  long side() const { return 2 * m() + 1; }

  long long site_count() const {
    long long s = side(), n = 1;
    for (int i = 0; i < dim; ++i) n *= s;
    return n;
  }

  bool contains(const std::array<long, kMaxDim>& z) const {
    long r = m();
    for (int i = 0; i < dim; ++i)
      if (z[i] < -r || z[i] > r) return false;
    return true;
  }

  long long index_of(const std::array<long, kMaxDim>& z) const {
    long r = m(), s = side();
    long long idx = 0;
    for (int i = 0; i < dim; ++i) idx = idx * s + (z[i] + r);
    return idx;
  }

  std::array<long, kMaxDim> coord_of(long long idx) const {
    long r = m(), s = side();
    std::array<long, kMaxDim> z{};
    for (int i = dim - 1; i >= 0; --i) {
      z[i] = static_cast<long>(idx % s) - r;
      idx /= s;
    }
    return z;
  }
};

}  // namespace pam
