#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pam/rng.hpp"

namespace pam {

enum class Family { triple_exp, constant, two_point };

// Site marginal of the i.i.d. potential.
//
// triple_exp: xi = rho0 * log log(1 + E), E ~ Exp(1). Upper tail
//   P(xi > r) = exp(1 - exp(exp(r / rho0))), support all of R, and
//   H(t) = log E[e^{t xi}] = log Int_0^inf (log(1+u))^{t rho0} e^{-u} du.
//   Scaling parameter of the almost-bounded class: hk_rho() = rho0.
// constant: xi = value surely (H(t) = value * t); degenerate comparison family.
// two_point: P(xi = lo) = p_lo, P(xi = hi) = 1 - p_lo; bounded comparison
//   family with closed-form H, used as an enumeration oracle.
struct PotentialDistribution {
  Family family = Family::constant;
  double rho0 = 1.0;                      // triple_exp
  double value = 0.0;                     // constant
  double lo = 0.0, hi = 0.0, p_lo = 0.5;  // two_point

  static PotentialDistribution triple_exp(double rho0) {
    if (!(rho0 > 0)) throw std::invalid_argument("triple_exp: rho0 must be positive");
    PotentialDistribution d;
    d.family = Family::triple_exp;
    d.rho0 = rho0;
    return d;
  }

  static PotentialDistribution constant(double c) {
    PotentialDistribution d;
    d.family = Family::constant;
    d.value = c;
    return d;
  }

  static PotentialDistribution two_point(double lo, double hi, double p_lo) {
    if (!(lo <= hi)) throw std::invalid_argument("two_point: lo must be <= hi");
    if (!(p_lo > 0 && p_lo < 1)) throw std::invalid_argument("two_point: p_lo must be in (0,1)");
    PotentialDistribution d;
    d.family = Family::two_point;
    d.lo = lo;
    d.hi = hi;
    d.p_lo = p_lo;
    return d;
  }

  // Scale parameter rho of the H(yt) - yH(t) ~ rho kappa(t) y log y asymptotic.
  // Zero for the bounded comparison families.
  double hk_rho() const { return family == Family::triple_exp ? rho0 : 0.0; }
};

// Cumulant generating function H(t) = log<e^{t xi(0)}>, t >= 0. For triple_exp
// the integral is evaluated by max-shifted adaptive Gauss-Kronrod quadrature
// (absolute tolerance 1e-10 on H; a power-law substitution u = v^3 smooths the
// u^{t rho0} corner at u = 0 when the exponent is small).
double cgf(const PotentialDistribution& dist, double t);

// Quantile transform at u in (0,1); exact inverse-transform sampling.
double quantile(const PotentialDistribution& dist, double u);

inline double sample(const PotentialDistribution& dist, Rng& rng) {
  return quantile(dist, rng.uniform());
}

// P(xi > r), exact per family; log_upper_tail returns log P (useful when the
// triple-exponential tail underflows).
double upper_tail(const PotentialDistribution& dist, double r);
double log_upper_tail(const PotentialDistribution& dist, double r);

// Draws from the exponentially tilted law dF_theta = e^{theta x - H(theta)} dF.
// two_point/constant tilts are exact; the triple_exp tilt inverts a dense
// piecewise-linear density table in the cube-root integration variable
// (documented approximation: ~4000 cells across the mass-bearing bracket, so
// the tabulated law differs from the exact tilt at O(cell width^2); the
// likelihood ratio exp{H(theta) - theta xi} treats the table as exact, which
// the tilted-vs-untilted agreement tests bound).
class TiltedSampler {
 public:
  TiltedSampler(const PotentialDistribution& dist, double theta);

  double sample(Rng& rng) const;
  double theta() const { return theta_; }
  double log_mgf() const { return log_mgf_; }  // H(theta)

 private:
  PotentialDistribution dist_;
  double theta_ = 0.0;
  double log_mgf_ = 0.0;
  double tilted_p_lo_ = 0.0;                  // two_point
  std::vector<double> v_edges_, dens_, cdf_;  // triple_exp density table
};

}  // namespace pam
