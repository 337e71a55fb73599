#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "pam/box.hpp"

namespace pam {

// Axis-aligned lattice rectangle with inclusive bounds, row-major indexing
// (axis 0 most significant). Generalizes the centered BoxSpec for the box
// decomposition, where shifted sub-boxes clipped to the big box are not
// centered.
struct Rect {
  int dim = 1;
  std::array<long, kMaxDim> lo{};
  std::array<long, kMaxDim> hi{};

  static Rect cube(const BoxSpec& box) {
    Rect r;
    r.dim = box.dim;
    for (int a = 0; a < box.dim; ++a) {
      r.lo[a] = -box.m();
      r.hi[a] = box.m();
    }
    return r;
  }

  long len(int a) const { return hi[a] - lo[a] + 1; }
  long long count() const {
    long long c = 1;
    for (int a = 0; a < dim; ++a) c *= len(a);
    return c;
  }
  bool contains(const std::array<long, kMaxDim>& z) const {
    for (int a = 0; a < dim; ++a)
      if (z[a] < lo[a] || z[a] > hi[a]) return false;
    return true;
  }
  long long index_of(const std::array<long, kMaxDim>& z) const {
    long long idx = 0;
    for (int a = 0; a < dim; ++a) idx = idx * len(a) + (z[a] - lo[a]);
    return idx;
  }
  std::array<long, kMaxDim> coord_of(long long idx) const {
    std::array<long, kMaxDim> z{};
    for (int a = dim - 1; a >= 0; --a) {
      z[a] = lo[a] + static_cast<long>(idx % len(a));
      idx /= len(a);
    }
    return z;
  }
};

// lap_coeff * Delta + V with zero (Dirichlet) boundary: the discrete Laplacian
// sums f(y) - f(z) over the 2d neighbors, out-of-box neighbors contributing
// -f(z). lap_coeff = 1 is the lattice operator; 1/h^2 gives the second-order
// finite-difference continuum Laplacian on a grid of interior nodes.
struct LatticeOperator {
  Rect rect;
  Eigen::ArrayXd v;
  double lap_coeff = 1.0;

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::MatrixXd dense() const;
};

struct EigenResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  long iterations = 0;
  double residual = 0.0;
};

struct EigenError : std::runtime_error {
  EigenError(const std::string& msg, double best_value, double best_residual)
      : std::runtime_error(msg + " (best Rayleigh quotient " + std::to_string(best_value) +
                           ", residual " + std::to_string(best_residual) + ")"),
        value(best_value),
        residual(best_residual) {}
  double value;
  double residual;
};

double rayleigh_quotient(const LatticeOperator& op, const Eigen::VectorXd& f);

// Full symmetric eigen-decomposition; the oracle path for boxes up to 4096
// sites.
EigenResult principal_eigen_dense(const LatticeOperator& op);

// Lanczos with full reorthogonalization from the all-ones start. Throws
// EigenError if the Ritz residual does not reach tol within the iteration
// budget.
EigenResult principal_eigen_lanczos(const LatticeOperator& op, double tol, long max_iter = 600);

// Dense below 400 sites, Lanczos above.
EigenResult principal_eigen(const LatticeOperator& op, double tol);

EigenResult principal_eigen_discrete(const BoxSpec& box, const Eigen::ArrayXd& v, double tol);

}  // namespace pam
