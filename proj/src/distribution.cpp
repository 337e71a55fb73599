#include "pam/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pam/quadrature.hpp"

namespace pam {

namespace {

// Solves x e^x = s for x > 0 (needed for the peak of the CGF integrand).
double lambert_w(double s) {
  double x = s >= std::exp(1.0) ? std::log(s) - std::log(std::log(s)) : s / (1.0 + s);
  for (int i = 0; i < 80; ++i) {
    double ex = std::exp(x);
    double dx = (x * ex - s) / (ex * (1.0 + x));
    x -= dx;
    if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

// Laplace data for the triple-exp CGF integrand phi(u) = s log log(1+u) - u.
struct CgfPeak {
  double ustar;   // peak location: (1+u) log(1+u) = s
  double phimax;  // phi(ustar)
};

CgfPeak cgf_peak(double s) {
  double w = lambert_w(s);  // log(1 + ustar)
  CgfPeak p;
  p.ustar = std::expm1(w);
  p.phimax = s * std::log(w) - p.ustar;
  return p;
}

// The integrand in the substituted variable u = v^3; the cube kills the
// u^s corner at u = 0 for small exponents. Max-shifted by phimax.
struct CgfIntegrand {
  double s, phimax;
  double phi_v(double v) const {
    double u = v * v * v;
    double lg = std::log1p(u);
    if (!(lg > 0)) return -std::numeric_limits<double>::infinity();
    return s * std::log(lg) - u;
  }
  double operator()(double v) const {
    double p = phi_v(v);
    if (!std::isfinite(p)) return 0.0;
    return 3.0 * v * v * std::exp(p - phimax);
  }
};

// Bracket [va, vb] around the peak where phi has dropped by `drop`; the
// initial quadrature cell must contain the peak or the error estimate can
// miss a narrow spike entirely.
void cgf_bracket(const CgfIntegrand& f, double vstar, double drop, double& va, double& vb) {
  const double target = -drop;  // phi_v - phimax threshold
  auto below = [&](double v) { return f.phi_v(v) - f.phimax < target; };
  vb = vstar + 1.0;
  while (!below(vb)) vb = 2.0 * vb + 1.0;
  double lo = vstar, hi = vb;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (below(mid) ? hi : lo) = mid;
  }
  vb = hi;
  if (below(1e-30)) {
    lo = 1e-30;
    hi = vstar;
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (below(mid) ? lo : hi) = mid;
    }
    va = lo;
  } else {
    va = 0.0;  // the corner still carries mass; integrate from the origin
  }
}

double cgf_triple_exp(double s) {
  if (s == 0.0) return 0.0;
  CgfPeak peak = cgf_peak(s);
  CgfIntegrand f{s, peak.phimax};
  double va, vb;
  cgf_bracket(f, std::cbrt(peak.ustar), 60.0, va, vb);
  // The exponent phi - phimax is a difference of terms of size |phimax|, so the
  // integrand carries relative rounding noise ~ eps * |phimax|; the tolerance
  // must not sit below that floor or the refinement chases noise forever.
  double noise = 32.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(peak.phimax));
  QuadResult q = integrate_adaptive(f, va, vb, 0.0, std::max(1e-12, noise), 4000);
  return peak.phimax + std::log(q.value);
}

}  // namespace

double cgf(const PotentialDistribution& dist, double t) {
  if (!(t >= 0)) throw std::domain_error("cgf: t must be nonnegative");
  switch (dist.family) {
    case Family::constant:
      return dist.value * t;
    case Family::two_point: {
      double a = t * dist.lo, b = t * dist.hi;
      double m = std::max(a, b);
      return m + std::log(dist.p_lo * std::exp(a - m) + (1.0 - dist.p_lo) * std::exp(b - m));
    }
    case Family::triple_exp:
      return cgf_triple_exp(t * dist.rho0);
  }
  throw std::logic_error("cgf: unknown family");
}

double quantile(const PotentialDistribution& dist, double u) {
  if (!(u > 0 && u < 1)) throw std::domain_error("quantile: u must be in (0,1)");
  switch (dist.family) {
    case Family::constant:
      return dist.value;
    case Family::two_point:
      return u < dist.p_lo ? dist.lo : dist.hi;
    case Family::triple_exp: {
      double e = -std::log1p(-u);  // Exp(1) quantile, increasing in u
      return dist.rho0 * std::log(std::log1p(e));
    }
  }
  throw std::logic_error("quantile: unknown family");
}

double log_upper_tail(const PotentialDistribution& dist, double r) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  switch (dist.family) {
    case Family::constant:
      return r < dist.value ? 0.0 : neg_inf;
    case Family::two_point:
      if (r < dist.lo) return 0.0;
      if (r < dist.hi) return std::log1p(-dist.p_lo);
      return neg_inf;
    case Family::triple_exp:
      // P(xi > r) = exp(1 - exp(exp(r/rho0))), exact for all real r.
      return -std::expm1(std::exp(r / dist.rho0));
  }
  throw std::logic_error("log_upper_tail: unknown family");
}

double upper_tail(const PotentialDistribution& dist, double r) {
  return std::exp(log_upper_tail(dist, r));
}

TiltedSampler::TiltedSampler(const PotentialDistribution& dist, double theta)
    : dist_(dist), theta_(theta) {
  if (!(theta >= 0)) throw std::domain_error("TiltedSampler: theta must be nonnegative");
  log_mgf_ = cgf(dist, theta);
  switch (dist.family) {
    case Family::constant:
      break;
    case Family::two_point: {
      double a = theta * dist.lo, b = theta * dist.hi;
      double m = std::max(a, b);
      double zl = dist.p_lo * std::exp(a - m), zh = (1.0 - dist.p_lo) * std::exp(b - m);
      tilted_p_lo_ = zl / (zl + zh);
      break;
    }
    case Family::triple_exp: {
      double s = theta * dist.rho0;
      if (s == 0.0) break;  // untilted; sample() falls back to the quantile
      // Tilted density in the cube-root variable, tabulated on a uniform grid
      // over the drop-60 bracket; within a cell the density is taken linear,
      // which the trapezoid cell masses match exactly.
      CgfPeak peak = cgf_peak(s);
      CgfIntegrand f{s, peak.phimax};
      double va, vb;
      cgf_bracket(f, std::cbrt(peak.ustar), 60.0, va, vb);
      const int n = 4000;
      double w = (vb - va) / n;
      v_edges_.resize(n + 1);
      dens_.resize(n + 1);
      cdf_.assign(n + 1, 0.0);
      for (int i = 0; i <= n; ++i) {
        v_edges_[i] = va + i * w;
        dens_[i] = f(v_edges_[i]);
      }
      for (int i = 1; i <= n; ++i)
        cdf_[i] = cdf_[i - 1] + 0.5 * (dens_[i - 1] + dens_[i]) * w;
      double total = cdf_[n];
      for (int i = 0; i <= n; ++i) {
        cdf_[i] /= total;
        dens_[i] /= total;
      }
      break;
    }
  }
}

double TiltedSampler::sample(Rng& rng) const {
  switch (dist_.family) {
    case Family::constant:
      return dist_.value;
    case Family::two_point:
      return rng.uniform() < tilted_p_lo_ ? dist_.lo : dist_.hi;
    case Family::triple_exp: {
      if (cdf_.empty()) return quantile(dist_, rng.uniform());
      double target = rng.uniform();
      auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
      std::size_t i = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
      // Invert the linear density f0 + (f1-f0) x/w on the cell: solve
      // f0 x + (f1-f0) x^2 / (2w) = r with the cancellation-free root.
      double w = v_edges_[i] - v_edges_[i - 1];
      double f0 = dens_[i - 1], f1 = dens_[i];
      double r = target - cdf_[i - 1];
      double a = (f1 - f0) / (2.0 * w);
      double denom = f0 + std::sqrt(std::max(f0 * f0 + 4.0 * a * r, 0.0));
      double x = denom > 0.0 ? 2.0 * r / denom : 0.5 * w;
      double v = v_edges_[i - 1] + std::min(x, w);
      double u = v * v * v;  // table lives in the cube-root variable
      return dist_.rho0 * std::log(std::log1p(u));
    }
  }
  throw std::logic_error("TiltedSampler: unknown family");
}

}  // namespace pam
