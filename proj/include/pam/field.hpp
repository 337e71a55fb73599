#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>

#include <Eigen/Core>

#include "pam/box.hpp"
#include "pam/distribution.hpp"
#include "pam/rng.hpp"
#include "pam/scale.hpp"

namespace pam {

// One i.i.d. realization on a lattice box. values follow the box enumeration
// order; regenerating with the same (dist, box, seed) is bit-identical.
struct PotentialField {
  BoxSpec box;
  Eigen::ArrayXd values;
  std::uint64_t seed = 0;
  PotentialDistribution dist;

  double value(const std::array<long, kMaxDim>& z) const { return values[box.index_of(z)]; }
  double value_or_zero(const std::array<long, kMaxDim>& z) const {
    return box.contains(z) ? values[box.index_of(z)] : 0.0;
  }
  double max_value() const { return values.size() ? values.maxCoeff() : 0.0; }
};

// Each site draws its own uniform from (seed, site index), so the field is
// independent of traversal order and thread count.
PotentialField sample_field(const PotentialDistribution& dist, const BoxSpec& box,
                            std::uint64_t seed);

// Piecewise-constant function on R^d backed by lattice values: cells are
// left-closed, x belongs to site floor(scale * x), and the cell value is
// min(amp * v, cap). Evaluation outside the backing box throws, naming the
// lattice radius the caller would need.
struct StepFunction {
  BoxSpec box;
  std::shared_ptr<const Eigen::ArrayXd> values;
  double scale = 1.0;
  double amp = 1.0;
  double cap = std::numeric_limits<double>::infinity();

  double operator()(const std::array<double, kMaxDim>& x) const;
};

// The vertically shifted and spatially rescaled pair built from one field:
// xi_t(z) = xi(z) - H(beta)/beta with beta = t/alpha^d, and
// xibar_t(x) = alpha^2 * xi_t(floor(alpha x)).
struct ShiftRescale {
  PotentialField xi_t;
  StepFunction xibar_t;
  double alpha;
  double beta;
  double vshift;  // H(beta)/beta, the per-site centering
};

ShiftRescale shift_rescale(const PotentialField& field, double t, const ScaleTable& table);

// Pointwise minimum with M; truncating twice equals truncating at the smaller
// level.
StepFunction truncate(StepFunction f, double M);

// P(xi(0) > H(beta)/beta + M/alpha^2)^{count/2}, evaluated through the exact
// log-tail so deep tails do not underflow prematurely.
double exceedance_tail(const PotentialDistribution& dist, const ScaleTable& table, double t,
                       int d, double M, long count);

}  // namespace pam
