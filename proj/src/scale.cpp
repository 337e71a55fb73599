#include "pam/scale.hpp"

#include <cmath>
#include <stdexcept>

#include "pam/quadrature.hpp"

namespace pam {

double ScaleTable::h(double t) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(t);
    if (it != memo_.end()) return it->second;
  }
  double value = cgf(dist_, t);
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(t, value);
  return value;
}

std::vector<std::pair<double, double>> ScaleTable::knots(double t_max) const {
  if (!(t_max >= 1)) throw std::domain_error("ScaleTable::knots: t_max must be >= 1");
  long n = static_cast<long>(std::ceil(4.0 * std::log(t_max)));
  std::vector<std::pair<double, double>> out;
  out.reserve(n + 1);
  for (long k = 0; k <= n; ++k) {
    double t = std::exp(0.25 * k);
    out.emplace_back(t, h(t));
  }
  return out;
}

double ScaleTable::integral_to(double W) const {
  if (!(W >= 0)) throw std::domain_error("ScaleTable::integral_to: W must be >= 0");
  const double step = 0.25;
  auto f = [this](double w) { return h(std::exp(w)); };
  // H(e^w) carries rounding noise of order eps * |H|, so segment tolerances
  // keep an absolute floor above it.
  auto seg_tol = [this, &f](double w_hi) {
    return std::max(quad_tol_, 1e-13 * (1.0 + std::abs(f(w_hi))));
  };
  std::size_t whole = static_cast<std::size_t>(std::floor(W / step));
  double base = 0.0;
  // Extend the cached prefix one segment at a time (evaluations outside the
  // lock; the append rechecks the length so concurrent builders agree).
  for (;;) {
    std::size_t have;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (cum_.empty()) cum_.push_back(0.0);
      have = cum_.size();
      if (have > whole) {
        base = cum_[whole];
        break;
      }
      base = cum_.back();
    }
    double a = (have - 1) * step, b = have * step;
    QuadResult q = integrate_adaptive(f, a, b, seg_tol(b), 1e-12);
    std::lock_guard<std::mutex> lock(mu_);
    if (cum_.size() == have) cum_.push_back(base + q.value);
  }
  double lo = whole * step;
  if (W <= lo) return base;
  QuadResult tail = integrate_adaptive(f, lo, W, seg_tol(W), 1e-12);
  return base + tail.value;
}

double kappa(const ScaleTable& table, double t) {
  if (!(t >= 1)) throw std::domain_error("kappa: t must be >= 1");
  if (t == 1) return table.h(1.0);
  return table.h(t) - table.integral_to(std::log(t));
}

double alpha_from_kappa(const std::function<double(double)>& kappa_fn, double t, int d) {
  if (d < 1) throw std::domain_error("alpha_from_kappa: d must be >= 1");
  auto g = [&](double beta) {
    double k = kappa_fn(beta);
    if (!(k > 0)) return -1.0;  // outside the admissible region
    return std::pow(beta, 1.0 + 0.5 * d) / std::pow(k, 0.5 * d);
  };
  // Anchor: smallest scanned beta with kappa > 0, G < t, and G locally
  // increasing (skips the non-monotone stretch where kappa changes sign).
  double anchor = 0.0;
  for (double beta = 2.0; beta <= t * 4.0 + 16.0; beta *= 2.0) {
    double gb = g(beta);
    if (gb > 0 && gb < t && g(2.0 * beta) > gb) {
      anchor = beta;
      break;
    }
  }
  if (anchor == 0.0)
    throw std::domain_error("alpha_from_kappa: no bracket below t; increase t");
  double lo = anchor, hi = 2.0 * anchor;
  while (g(hi) < t) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw std::domain_error("alpha_from_kappa: G never reaches t");
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) < t ? lo : hi) = mid;
  }
  double beta = 0.5 * (lo + hi);
  return std::sqrt(beta / kappa_fn(beta));
}

double alpha_scale(const ScaleTable& table, double t, int d) {
  auto kf = [&table](double beta) { return kappa(table, beta); };
  double alpha = alpha_from_kappa(kf, t, d);
  double beta = t / std::pow(alpha, d);
  double rhs = t / std::pow(alpha, d + 2);
  double residual = std::abs(kappa(table, beta) - rhs);
  if (!(residual <= 1e-8 * rhs))
    throw std::runtime_error("alpha_scale: defining residual above rtol");
  return alpha;
}

HkCheck hk_ratio(const ScaleTable& table, double t, double y, double rho) {
  if (!(t >= 1)) throw std::domain_error("hk_ratio: t must be >= 1");
  if (!(y > 0)) throw std::domain_error("hk_ratio: y must be positive");
  HkCheck r;
  r.diff = table.h(y * t) - y * table.h(t);
  r.target = kappa(table, t) * rho * y * std::log(y);
  return r;
}

}  // namespace pam
