#pragma once

#include <cmath>

#include "pam/eigen_solve.hpp"
#include "pam/field.hpp"
#include "pam/grid.hpp"
#include "pam/scale.hpp"

namespace pam {

// Cell averages psi^d(z) = alpha^d * int over [z/alpha, (z+1)/alpha)^d of psi,
// by the composite midpoint rule with subdiv points per axis. Midpoints never
// touch cell boundaries, so step discontinuities aligned with the lattice
// cells are averaged exactly.
template <class F>
Eigen::ArrayXd discretize_cells(F&& psi, int d, double alpha, const BoxSpec& box, int subdiv) {
  Eigen::ArrayXd out(box.site_count());
  const double sub_h = 1.0 / (alpha * subdiv);
  long long pts = 1;
  for (int a = 0; a < d; ++a) pts *= subdiv;
  for (long long i = 0; i < out.size(); ++i) {
    auto z = box.coord_of(i);
    double acc = 0.0;
    for (long long p = 0; p < pts; ++p) {
      std::array<double, kMaxDim> x{};
      long long rem = p;
      for (int a = d - 1; a >= 0; --a) {
        long j = static_cast<long>(rem % subdiv);
        rem /= subdiv;
        x[a] = z[a] / alpha + (j + 0.5) * sub_h;
      }
      acc += psi(x);
    }
    out[i] = acc / static_cast<double>(pts);
  }
  return out;
}

// GridFunction overload; requires the grid to resolve the lattice cells
// (h <= 1/alpha), else throws demanding refinement.
Eigen::ArrayXd discretize_continuum(const GridFunction& psi, double t, const ScaleTable& table,
                                    const BoxSpec& box);

// alpha^2 * lambda^d(psi^d / alpha^2) on the lattice box whose Dirichlet zero
// layer sits at round(R alpha), i.e. sites up to round(R alpha) - 1: when
// R alpha is an integer the represented continuum domain is exactly Q_R and
// the remaining error is the O(h^2) stencil consistency error, h = 1/alpha.
double rescaled_eigen(const GridFunction& psi, double R, double t, const ScaleTable& table,
                      double tol = 1e-10);

struct BoxGap {
  double lambda_big;
  double lambda_submax;
  double gap;  // lambda_big - lambda_submax
};

// Principal eigenvalue on the field's box versus the maximum over the shifted
// sub-boxes 4kR*alpha + B_{3R*alpha} clipped to it. The big box radius must be
// a multiple of the shift spacing round(4 R alpha).
BoxGap box_decomposition_gap(const PotentialField& field, double R, double t,
                             const ScaleTable& table, double tol = 1e-10);

}  // namespace pam
