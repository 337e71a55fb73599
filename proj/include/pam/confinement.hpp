#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "pam/field.hpp"
#include "pam/grid.hpp"
#include "pam/scale.hpp"

namespace pam {

// Real function on R^d, evaluated pointwise. StepFunction and GridFunction
// lambdas both wrap into this.
using ProfileFn = std::function<double(const std::array<double, kMaxDim>&)>;

struct GlobalDistance {
  double value = 0.0;       // sum over r <= r_max of 2^{-r} I_r/(1+I_r)
  double tail_bound = 0.0;  // 2^{-r_max}, bounds the dropped remainder
};

// L^1-on-compacts metric: I_r = int over Q_r of |f1 - f2| by tensor trapezoid
// with subdiv nodes per unit length. The r-th term is bounded by 2^{-r}
// whatever the integrand, so the value is always < 1 and the truncation error
// is at most tail_bound. Both functions must be evaluable on Q_{r_max}.
GlobalDistance dist_global(const ProfileFn& f1, const ProfileFn& f2, int d, int r_max,
                           int subdiv);

// int |e^{psi1/rho} - e^{psi2/rho}| over the (shared) grid cube, trapezoid
// weights. The grids must match exactly.
double dist_box(const GridFunction& psi1, const GridFunction& psi2, double rho);

// Candidate shifts on the lattice (j - half) * spacing per axis, half =
// round(extent / spacing), enumerated row-major with axis 0 most significant,
// i.e. lexicographically ascending. extent/spacing must be integral to 1e-9.
struct ShiftGrid {
  int d = 1;
  double extent = 0.0;
  double spacing = 0.0;
  std::vector<std::array<double, kMaxDim>> shifts;
};

ShiftGrid make_shift_grid(int d, double extent, double spacing);

struct ShapeDistance {
  double value = 0.0;                         // best d_R over the shift grid
  std::array<double, kMaxDim> argmin_shift{};  // first minimizer in grid order
  double M = 0.0;                             // truncation level applied
  double R = 0.0;                             // window radius
};

// min over shifts x of int over Q_R of |e^{(psi(x+y) ^ M)/rho} - e^{hat(y)/rho}| dy,
// hat the centered parabola profile for (rho, d). psi must be evaluable on
// Q_{R + extent}; the window quadrature uses spacing R/round(R/h) so the cube
// is exactly Q_R. Ties keep the earliest shift; an empty grid is a domain
// error.
ShapeDistance best_shift_distance(const ProfileFn& psi, int d, double R, double M, double rho,
                                  const ShiftGrid& shifts, double h);

// Exponent (t/alpha^2) rho log((e/rho) L(psi)) of the profile growth factor,
// with L over psi's own cube; log-domain so large psi cannot overflow.
// Monotone in psi.
double functional_F_log(const GridFunction& psi, double t, double rho, const ScaleTable& table);

// |L(psi) - rho| <= band, L over psi's own cube.
bool functional_L_within(const GridFunction& psi, double band, double rho);

struct RateCheck {
  double finite_t = 0.0;  // exact finite-t cumulant at speed t/alpha^2
  double limit = 0.0;     // rho int f log f
};

// Deterministic check that the tilted-cumulant rate of the rescaled field
// converges to the entropy functional: site independence turns the finite-t
// cumulant into the exact cell sum (alpha^2/t) sum_z [H(t c_z) - c_z alpha^d
// H(t/alpha^d)], c_z = int over cell_z intersect Q_R of f by the composite
// midpoint rule with subdiv points per axis. f >= 0 on its grid cube Q_R.
RateCheck cumulant_rate_check(const ScaleTable& table, const GridFunction& f, double rho,
                              double t, int subdiv = 8);

// log int over Q_W of e^{(xibar ^ M)/rho}: the integrand is constant on the
// lattice cells [z/alpha, (z+1)/alpha), so the integral is an exact clipped
// cell sum, max-shifted. Throws if the field box does not cover the cells
// meeting Q_W.
double profile_log_integral(const ShiftRescale& sr, double W, double M, double rho);

struct MomentEstimate {
  double rate = 0.0;  // (alpha^2/t) log mean of the sampled growth factors
  double se = 0.0;    // delta-method stderr of rate
  double ess = 0.0;   // (sum w)^2 / sum w^2 of the shifted weights
  bool low_ess = false;
};

// MC estimate of the K-th annealed growth moment rate (alpha^2/t) log
// <exp{(t/alpha^2) K log int_{Q_3R} e^{(xibar ^ M)/rho}}> from replica fields
// on the lattice box of radius ceil(3 R alpha); replica k samples from seed'
// = mix64(seed ^ mix64(k+1)). Aggregation is a single max-shifted log-sum-exp;
// ess < 10 sets low_ess. Pass M = peak + 1 (peak the parabola profile height)
// unless probing the truncation.
MomentEstimate annealed_F_moment(const ScaleTable& table, int d, double t, double R, double rho,
                                 double K, double M, long replicas, std::uint64_t seed);

struct MomentIdentity {
  double enumerated = 0.0;  // <(sum_z e^{c xi(z)})^D> over the product law
  double regrouped = 0.0;   // multinomial regrouping into per-site factors
};

// Both sides of the integer-moment regrouping on `sites` i.i.d. atoms:
// direct enumeration of the product law versus sum over compositions
// k_1+...+k_n = D of D!/(k_1!...k_n!) prod_j <e^{c k_j xi}>. atoms^sites
// must stay enumerable (<= 2e6).
MomentIdentity multinomial_identity(const std::vector<double>& atom_values,
                                    const std::vector<double>& atom_probs, int sites, double c,
                                    int D);

// Per-site exponential tilt theta_z with its log-normalizers H(theta_z); the
// likelihood ratio of a tilted sample back to the base law is
// exp{sum_z (H(theta_z) - theta_z xi(z))}.
struct TiltSpec {
  BoxSpec box;
  Eigen::ArrayXd theta;
  Eigen::ArrayXd log_norm;
};

// Tilt matched to the optimal profile: theta_z = (t/alpha^d) e^{hat(z/alpha)/rho - 1}
// on the lattice box of radius ceil(3 R alpha), hat the centered parabola for
// (rho, d). Pushes each site's mean toward the shape that dominates the
// weighted ensemble, so importance weights stop collapsing on rare fields.
TiltSpec default_tilt(const ScaleTable& table, int d, double t, double R, double rho);

struct ConfinementOptions {
  std::vector<double> t_grid;
  std::vector<double> eps_grid;
  double R = 2.0;
  double M = 0.0;  // > 0: single truncation level; else the pair {peak+1, 2(peak+1)}
  double rho = 1.0;
  int d = 1;
  long replicas = 200;
  bool tilted = true;
  std::uint64_t seed = 1;
  double shift_spacing = 0.0;  // <= 0: R/8
  double window_h = 0.0;       // <= 0: R/40
  double ess_floor = 10.0;
  bool keep_replicas = false;  // retain per-replica weights and distances
};

struct ConfinementReport {
  std::vector<double> t_grid;
  std::vector<double> eps_grid;
  double R = 0.0;
  double M = 0.0;  // top truncation level used for the weights
  double rho = 0.0;
  int d = 1;
  long replicas = 0;
  bool tilted = false;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> tail;  // tail[ti][ei] = G_t(eps)
  std::vector<double> ess;                // per t
  std::vector<char> ess_low;              // per t
  std::vector<std::vector<double>> log_weights;  // per t when kept
  std::vector<std::vector<double>> distances;    // per t when kept
  std::vector<std::vector<std::array<double, kMaxDim>>> argmin_shifts;  // per t when kept
};

// Mass-weighted shape experiment: per time t, sample N rescaled fields
// (tilted and reweighted when requested; replica i of time index ti uses
// stream ti*N + i), weight each by exp{t lambda} with lambda the principal
// eigenvalue of the field truncated at M/alpha^2 on the radius-ceil(3 R alpha)
// box, measure the best-shift distance of its profile to the parabola (the
// smallest over the truncation levels), and report G_t(eps) = weighted
// fraction at distance > eps. Weights are aggregated under one max-shift;
// G_t is exactly nonincreasing in eps, and the effective sample size
// (sum w)^2/sum w^2 is flagged when below ess_floor.
ConfinementReport confinement_experiment(const ScaleTable& table, const ConfinementOptions& opts);

// <U(t)^p>^{1/p} / <U(t)^q>^{1/q} from N replica fields on the lattice box of
// the given radius, U by the dense propagator. Moments are formed in the log
// domain from one shared sample, so p = q gives exactly 1 and a deterministic
// potential gives 1 to rounding. Requires 0 < p <= q.
double intermittency_ratio(const PotentialDistribution& dist, int d, long radius, double p,
                           double q, double t, long replicas, std::uint64_t seed);

}  // namespace pam
