#include "pam/spectral.hpp"

#include <stdexcept>

namespace pam {

Eigen::ArrayXd discretize_continuum(const GridFunction& psi, double t, const ScaleTable& table,
                                    const BoxSpec& box) {
  double alpha = alpha_scale(table, t, psi.d);
  if (psi.h > 1.0 / alpha * (1.0 + 1e-9))
    throw std::invalid_argument("discretize_continuum: grid spacing exceeds 1/alpha; refine");
  int subdiv = static_cast<int>(std::ceil(1.0 / (alpha * psi.h) - 1e-9));
  return discretize_cells([&psi](const std::array<double, kMaxDim>& x) { return psi.value_at(x); },
                          psi.d, alpha, box, std::max(subdiv, 1));
}

double rescaled_eigen(const GridFunction& psi, double R, double t, const ScaleTable& table,
                      double tol) {
  double alpha = alpha_scale(table, t, psi.d);
  long m = std::max<long>(0, std::lround(R * alpha) - 1);
  BoxSpec box = BoxSpec::lattice_box(psi.d, m);
  Eigen::ArrayXd v = discretize_continuum(psi, t, table, box) / (alpha * alpha);
  EigenResult r = principal_eigen_discrete(box, v, tol);
  return alpha * alpha * r.value;
}

BoxGap box_decomposition_gap(const PotentialField& field, double R, double t,
                             const ScaleTable& table, double tol) {
  const int d = field.box.dim;
  double alpha = alpha_scale(table, t, d);
  long spacing = std::lround(4.0 * R * alpha);
  long m_sub = static_cast<long>(std::ceil(3.0 * R * alpha));
  long m_big = field.box.m();
  if (spacing <= 0) throw std::invalid_argument("box_decomposition_gap: shift spacing is zero");
  if (m_big % spacing != 0)
    throw std::invalid_argument(
        "box_decomposition_gap: big box radius must be a multiple of the shift spacing " +
        std::to_string(spacing));

  BoxGap out;
  {
    LatticeOperator op{Rect::cube(field.box), field.values, 1.0};
    out.lambda_big = principal_eigen(op, tol).value;
  }

  long kmax = m_big / spacing;
  long long shifts = 1;
  for (int a = 0; a < d; ++a) shifts *= 2 * kmax + 1;
  out.lambda_submax = -std::numeric_limits<double>::infinity();
  for (long long si = 0; si < shifts; ++si) {
    Rect sub;
    sub.dim = d;
    long long rem = si;
    for (int a = d - 1; a >= 0; --a) {
      long k = static_cast<long>(rem % (2 * kmax + 1)) - kmax;
      rem /= 2 * kmax + 1;
      long center = k * spacing;
      sub.lo[a] = std::max(center - m_sub, -m_big);
      sub.hi[a] = std::min(center + m_sub, m_big);
    }
    Eigen::ArrayXd v(sub.count());
    for (long long i = 0; i < v.size(); ++i) v[i] = field.value(sub.coord_of(i));
    LatticeOperator op{sub, v, 1.0};
    out.lambda_submax = std::max(out.lambda_submax, principal_eigen(op, tol).value);
  }
  out.gap = out.lambda_big - out.lambda_submax;
  return out;
}

}  // namespace pam
