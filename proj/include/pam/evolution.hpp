#pragma once

#include <array>
#include <cstdint>
#include <map>

#include <Eigen/Core>

#include "pam/box.hpp"
#include "pam/field.hpp"
#include "pam/rng.hpp"
#include "pam/scale.hpp"

namespace pam {

// Solution of the heat equation with potential, v' = (Delta + xi) v, started
// from a unit mass at the origin and integrated on the field's box with zero
// boundary.
struct SolutionState {
  double time = 0.0;
  BoxSpec box;
  Eigen::ArrayXd values;
};

double total_mass(const SolutionState& state);

// Krylov propagator: adaptive substeps, each applying the exponential of the
// symmetric tridiagonal Lanczos restriction, local error per step <= tol
// prorated over the step length. Throws on step-size underflow, reporting the
// stiffness ratio. Final values are clamped to [0, inf); the clamp magnitude
// is below the error budget.
SolutionState evolve(const PotentialField& field, double t, double tol = 1e-8);

// Exact oracle via full symmetric eigen-decomposition; boxes up to 4096 sites.
SolutionState evolve_dense(const PotentialField& field, double t);

// Default truncation radius: diffusive range plus the growth range of the
// largest potential peak.
long evolve_radius(int d, double t, double max_xi_plus);

// Occupation record of one continuous-time walk path over [0, t]: the hold
// times partition [0, t], so the occupation times sum to t.
struct LocalTimes {
  std::map<std::array<long, kMaxDim>, double> times;
  std::array<long, kMaxDim> endpoint{};
};

// Simple random walk from the origin with total jump rate 2d and uniform
// neighbor choice, holds accumulated exactly from exponential draws.
LocalTimes simulate_walk(int d, double t, Rng& rng);

// Monte Carlo of the path-integral weight e^{<l_t, xi>} over `replicas` walks;
// sites outside the field's box carry zero potential, so the box must be large
// enough that excursions beyond it are rare or worthless. Replica i draws from
// the (seed, i) stream; the reduction is pairwise and deterministic.
MeanStderr fk_estimate(const PotentialField& field, double t, long replicas, std::uint64_t seed);

// Same estimator, but a path that leaves the box of radius ceil(3 R alpha(t))
// contributes zero weight.
MeanStderr fk_restricted(const PotentialField& field, double t, double R, const ScaleTable& table,
                         long replicas, std::uint64_t seed);

}  // namespace pam
