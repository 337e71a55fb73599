#pragma once

#include <functional>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pam/distribution.hpp"

namespace pam {

// Memoizes H(t) = cgf(dist, t). Build-once, read-many: every evaluation is
// cached under a mutex, so concurrent readers see consistent values and
// repeated scale computations (kappa integrals, alpha bisections) do not
// recompute the quadrature.
class ScaleTable {
 public:
  explicit ScaleTable(PotentialDistribution dist, double quad_tol = 1e-10)
      : dist_(std::move(dist)), quad_tol_(quad_tol) {}

  const PotentialDistribution& dist() const { return dist_; }
  double quad_tol() const { return quad_tol_; }

  // Memoized H(t).
  double h(double t) const;

  // H sampled on the log-spaced grid t = e^{k/4}, k = 0..ceil(4 log t_max);
  // returned as (t, H(t)) pairs. Serves convexity checks and table exports.
  std::vector<std::pair<double, double>> knots(double t_max) const;

  // int_0^W H(e^w) dw for W >= 0, i.e. int_1^{e^W} H(s)/s ds. Whole knot
  // segments of width 1/4 are integrated once and cached cumulatively, so
  // repeated evaluations (the alpha bisection) cost one partial segment each.
  double integral_to(double W) const;

 private:
  PotentialDistribution dist_;
  double quad_tol_;
  mutable std::mutex mu_;
  mutable std::unordered_map<double, double> memo_;
  mutable std::vector<double> cum_;  // cum_[j] = integral_to(j/4)
};

// kappa(t) = H(t) - int_1^t H(s)/s ds, t >= 1. The integral runs in w = log s
// where it is int_0^{log t} H(e^w) dw.
double kappa(const ScaleTable& table, double t);

// Root of kappa(t/alpha^d) = t/alpha^{d+2} for a caller-supplied kappa: with
// beta = t/alpha^d the equation reads G(beta) = beta^{1+d/2}/kappa(beta)^{d/2}
// = t, solved by bisection on a bracket found by scanning to where kappa > 0
// and G is below t and locally increasing. Returns alpha = (beta/kappa)^{1/2}.
// Throws std::domain_error (asking for larger t) if no bracket exists.
double alpha_from_kappa(const std::function<double(double)>& kappa_fn, double t, int d);

// Canonical alpha(t): alpha_from_kappa on the table's kappa, with the defining
// residual |kappa(t/alpha^d) - t/alpha^{d+2}| <= 1e-8 * t/alpha^{d+2} enforced
// on the returned value.
double alpha_scale(const ScaleTable& table, double t, int d);

// Pieces of the H(yt) - y H(t) ~ rho kappa(t) y log y asymptotic: diff is the
// left side, target the right. Callers form diff/target only when y != 1.
struct HkCheck {
  double diff;
  double target;
};
HkCheck hk_ratio(const ScaleTable& table, double t, double y, double rho);

}  // namespace pam
