#pragma once

#include <cstdint>
#include <vector>

#include "pam/grid.hpp"

namespace pam {

// chi = rho d (1 - (1/2) log(rho/pi)), the value of the spectral variational
// problem; the parabola and Gaussian below attain it.
double chi_closed_form(double rho, int d);

// psi_hat(x) = rho + rho (d/2) log(rho/pi) - rho^2 |x|^2 on the grid.
GridFunction parabola_psi_hat(double rho, int d, const GridFunction& grid);

// g_hat(x) = (rho/pi)^{d/4} e^{-rho |x|^2 / 2}; g_hat^2 = e^{psi_hat/rho}/e.
GridFunction gaussian_g_hat(double rho, int d, const GridFunction& grid);

// L(psi) = (rho/e) Int e^{psi/rho}, evaluated max-shifted so large psi cannot
// overflow.
double functional_L(const GridFunction& psi, double rho);

// H(g^2) = rho Int g^2 log g^2 with 0 log 0 = 0.
double entropy_H(const GridFunction& g, double rho);

// rho Int f log f with 0 log 0 = 0; f must be nonnegative.
double rate_H_R(const GridFunction& f, double rho);

// Int p log(p/q), 0 log(0/q) = 0; +inf when p charges a node with q = 0.
// Both densities must integrate to 1 within 1e-8.
double relative_entropy(const GridFunction& p, const GridFunction& q);

// Finite-difference Dirichlet energy sum_links h^{d-2} (g_b - g_a)^2 with g
// extended by zero outside the grid; equals -<Lap_h g, g> with that extension.
double dirichlet_energy(const GridFunction& g);

// J(g) = dirichlet_energy(g) - entropy_H(g, rho), the objective behind chi.
double functional_J(const GridFunction& g, double rho);

// Gradient of J in the h^d-weighted inner product: 2(-Lap_h g - rho g (log g^2 + 1)).
GridFunction chi_gradient(const GridFunction& g, double rho);

// Principal eigenvalue of Lap_h + psi with zero boundary on the grid cube.
double eigen_continuum(const GridFunction& psi, double tol);

// L(psi) - [<g^2, psi> - H(g^2)]; nonnegative up to quadrature error, zero at
// a Legendre-dual pair. g must be unit L^2-normalized.
double legendre_gap(const GridFunction& psi, const GridFunction& g, double rho);

struct TraceRow {
  long iteration;
  double value;
  double grad_norm;
};

struct ChiOptions {
  double gtol = 1e-6;          // Riemannian gradient norm target
  long max_iter = 20000;       // per descent run
  double step_init = 1e-3;     // first trial step
  double c1 = 1e-4;            // Armijo slope fraction
  int window = 10;             // nonmonotone reference window
  std::uint64_t seed = 2026;   // multistart draws
  int threads = 1;             // parallelism over starts
  double mu_init = 10.0;       // penalty schedule
  double mu_growth = 10.0;
  double mu_max = 1e8;
  double vtol = 1e-6;          // accepted constraint violation
  std::vector<TraceRow>* trace = nullptr;  // optional per-iteration log
};

struct VariationalResult {
  double value = 0.0;
  GridFunction minimizer;
  long iterations = 0;
  double grad_norm = 0.0;
  double feasibility_residual = 0.0;
  bool converged = false;
};

// Projected (sphere-constrained) descent for chi on the grid: boundary nodes
// pinned to zero, unit mass h^d sum g^2 = 1, BB steps with a nonmonotone
// Armijo backtracking. Default start is a broad centered Gaussian; the second
// overload starts from init instead.
VariationalResult minimize_chi(double rho, int d, const GridFunction& grid,
                               const ChiOptions& opts);
VariationalResult minimize_chi(double rho, int d, const GridFunction& grid,
                               const ChiOptions& opts, const GridFunction& init);

// min over grid-aligned shifts x in Q_{2R} of Int_{Q_R} |g^2(x+y) - g_hat^2(y)| dy.
// Ties between shifts break lexicographically in the shift enumeration.
double nearest_translate_distance(const GridFunction& g, double rho, double R);

struct ConstrainedChiResult {
  VariationalResult best;              // lowest feasible (or least-violating) start
  std::vector<double> start_values;    // final objective per start, by start index
  std::vector<double> start_violations;
};

// chi_R(eps): the chi objective on the Q_{3R} grid subject to every translate
// of g^2 staying L^1-distance >= eps from g_hat^2 on Q_R. Quadratic penalty on
// the violated best-shift constraint, 8 starts (start 0 is the truncated
// Gaussian, the rest are seeded random fields); eps = 0 short-circuits to the
// unconstrained minimizer. Throws std::domain_error when eps exceeds the
// infeasibility bound 1 + mass of g_hat^2 in Q_R.
ConstrainedChiResult minimize_chi_constrained(double rho, int d, double eps, double R,
                                              const GridFunction& grid,
                                              const ChiOptions& opts);

// Discretization allowance for the log-Sobolev floor J >= chi - slack(h, L):
// the h^2 energy deficit of the discretized Gaussian plus its off-grid mass,
// with measured constants (see the convergence study in the tests).
double chi_slack(double rho, int d, double h, double L);

}  // namespace pam
