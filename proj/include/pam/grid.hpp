#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "pam/box.hpp"
#include "pam/rng.hpp"

namespace pam {

// Real function on the uniform tensor grid over Q_L = [-L, L]^d with spacing
// h (2L/h integral; make() snaps L up to the next multiple). Nodes enumerate
// row-major with axis 0 most significant. zero_outside selects the off-grid
// convention for value_at: 0 for compactly supported functions, clamp to the
// nearest node otherwise.
struct GridFunction {
  int d = 1;
  double L = 1.0;
  double h = 0.5;
  bool zero_outside = false;
  Eigen::ArrayXd values;

  static GridFunction make(int d, double L, double h, bool zero_outside = false);

  long n() const { return 2 * half_ + 1; }  // nodes per axis
  long half() const { return half_; }
  long long node_count() const { return values.size(); }
  double coord(long i) const { return h * (i - half_); }

  long long index_of(const std::array<long, kMaxDim>& node) const {
    long long idx = 0;
    for (int a = 0; a < d; ++a) idx = idx * n() + node[a];
    return idx;
  }
  std::array<long, kMaxDim> node_of(long long idx) const {
    std::array<long, kMaxDim> node{};
    for (int a = d - 1; a >= 0; --a) {
      node[a] = static_cast<long>(idx % n());
      idx /= n();
    }
    return node;
  }
  std::array<double, kMaxDim> point_of(long long idx) const {
    auto node = node_of(idx);
    std::array<double, kMaxDim> x{};
    for (int a = 0; a < d; ++a) x[a] = coord(node[a]);
    return x;
  }

  // Trapezoid tensor weight of one node: h^d halved once per boundary axis.
  double node_weight(long long idx) const {
    auto node = node_of(idx);
    double w = 1.0;
    for (int a = 0; a < d; ++a) w *= (node[a] == 0 || node[a] == n() - 1) ? 0.5 * h : h;
    return w;
  }

  // Multilinear interpolation; off-grid per zero_outside.
  double value_at(const std::array<double, kMaxDim>& x) const;

  template <class F>
  void fill(F&& f) {
    for (long long i = 0; i < node_count(); ++i) values[i] = f(point_of(i));
  }

  long half_ = 0;  // L / h
};

// Composite trapezoid integral of op(value, point) over Q_L; pairwise-summed
// for deterministic rounding.
template <class Op>
double integrate_with(const GridFunction& f, Op&& op) {
  std::vector<double> terms(f.node_count());
  for (long long i = 0; i < f.node_count(); ++i)
    terms[i] = f.node_weight(i) * op(f.values[i], i);
  return pairwise_sum(terms);
}

double integrate(const GridFunction& f);

// log of the trapezoid integral of e^{psi/rho} over Q_L, max-shifted.
double log_integral_exp(const GridFunction& psi, double rho);

GridFunction truncate(const GridFunction& f, double M);

}  // namespace pam
