#include "pam/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pam {

PotentialField sample_field(const PotentialDistribution& dist, const BoxSpec& box,
                            std::uint64_t seed) {
  if (box.kind != BoxKind::lattice)
    throw std::invalid_argument("sample_field: box must be a lattice box");
  PotentialField field;
  field.box = box;
  field.seed = seed;
  field.dist = dist;
  field.values.resize(box.site_count());
  for (long long i = 0; i < field.values.size(); ++i)
    field.values[i] = quantile(dist, uniform_at(seed, static_cast<std::uint64_t>(i)));
  return field;
}

double StepFunction::operator()(const std::array<double, kMaxDim>& x) const {
  std::array<long, kMaxDim> z{};
  for (int i = 0; i < box.dim; ++i) z[i] = static_cast<long>(std::floor(scale * x[i]));
  if (!box.contains(z)) {
    long need = 0;
    for (int i = 0; i < box.dim; ++i) need = std::max(need, std::abs(z[i]));
    throw std::domain_error("StepFunction: point outside backing box, need lattice radius " +
                            std::to_string(need));
  }
  return std::min(amp * (*values)[box.index_of(z)], cap);
}

ShiftRescale shift_rescale(const PotentialField& field, double t, const ScaleTable& table) {
  ShiftRescale out;
  out.alpha = alpha_scale(table, t, field.box.dim);
  out.beta = t / std::pow(out.alpha, field.box.dim);
  out.vshift = table.h(out.beta) / out.beta;
  out.xi_t = field;
  out.xi_t.values -= out.vshift;
  auto shared = std::make_shared<Eigen::ArrayXd>(out.xi_t.values);
  out.xibar_t = StepFunction{field.box, shared, out.alpha, out.alpha * out.alpha,
                             std::numeric_limits<double>::infinity()};
  return out;
}

StepFunction truncate(StepFunction f, double M) {
  f.cap = std::min(f.cap, M);
  return f;
}

double exceedance_tail(const PotentialDistribution& dist, const ScaleTable& table, double t,
                       int d, double M, long count) {
  if (count < 0) throw std::domain_error("exceedance_tail: count must be nonnegative");
  if (count == 0) return 1.0;
  double alpha = alpha_scale(table, t, d);
  double beta = t / std::pow(alpha, d);
  double level = table.h(beta) / beta + M / (alpha * alpha);
  return std::exp(0.5 * count * log_upper_tail(dist, level));
}

}  // namespace pam
