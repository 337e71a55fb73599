#include "pam/grid.hpp"

#include <stdexcept>

namespace pam {

GridFunction GridFunction::make(int d, double L, double h, bool zero_outside) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("GridFunction: d must be 1..3");
  if (!(h > 0) || !(L > 0)) throw std::invalid_argument("GridFunction: L, h must be positive");
  GridFunction g;
  g.d = d;
  g.h = h;
  g.half_ = static_cast<long>(std::ceil(L / h - 1e-9));
  g.L = g.half_ * h;
  g.zero_outside = zero_outside;
  long long count = 1;
  for (int a = 0; a < d; ++a) count *= g.n();
  g.values = Eigen::ArrayXd::Zero(count);
  return g;
}

double GridFunction::value_at(const std::array<double, kMaxDim>& x) const {
  std::array<long, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int a = 0; a < d; ++a) {
    double u = (x[a] + L) / h;
    if (u < 0 || u > n() - 1) {
      if (zero_outside) return 0.0;
      u = std::min(std::max(u, 0.0), static_cast<double>(n() - 1));
    }
    long i = std::min(static_cast<long>(u), n() - 2L);
    base[a] = std::max(i, 0L);
    frac[a] = u - base[a];
  }
  // Accumulate the 2^d corner blend.
  double acc = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    std::array<long, kMaxDim> node = base;
    for (int a = 0; a < d; ++a) {
      if (corner & (1 << a)) {
        node[a] += 1;
        w *= frac[a];
      } else {
        w *= 1.0 - frac[a];
      }
    }
    if (w != 0.0) acc += w * values[index_of(node)];
  }
  return acc;
}

double integrate(const GridFunction& f) {
  return integrate_with(f, [](double v, long long) { return v; });
}

double log_integral_exp(const GridFunction& psi, double rho) {
  if (!(rho > 0)) throw std::domain_error("log_integral_exp: rho must be positive");
  double m = psi.values.maxCoeff() / rho;
  double s = integrate_with(psi, [&](double v, long long) { return std::exp(v / rho - m); });
  return m + std::log(s);
}

GridFunction truncate(const GridFunction& f, double M) {
  GridFunction out = f;
  out.values = out.values.min(M);
  return out;
}

}  // namespace pam
