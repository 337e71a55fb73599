#include "pam/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pam/eigen_solve.hpp"

namespace pam {

namespace {

long long origin_index(const BoxSpec& box) {
  return box.index_of(std::array<long, kMaxDim>{});
}

// exp(tau T) e1 for the symmetric tridiagonal Lanczos restriction with
// diagonal a and off-diagonal b.
Eigen::VectorXd expm_tridiag_e1(const Eigen::Ref<const Eigen::VectorXd>& a,
                                const Eigen::Ref<const Eigen::VectorXd>& b, double tau) {
  const long m = a.size();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (long i = 0; i < m; ++i) {
    T(i, i) = a[i];
    if (i + 1 < m) {
      T(i, i + 1) = b[i];
      T(i + 1, i) = b[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Eigen::VectorXd coef = es.eigenvectors().row(0).transpose();
  Eigen::ArrayXd scaled = (tau * es.eigenvalues().array()).exp() * coef.array();
  return es.eigenvectors() * scaled.matrix();
}

SolutionState make_state(const PotentialField& field, double time, Eigen::ArrayXd values) {
  SolutionState s;
  s.time = time;
  s.box = field.box;
  s.values = std::move(values);
  return s;
}

// One continuous-time walk path: visit(z, hold) for every hold; returns the
// endpoint. The final hold is the remainder t - elapsed, so the holds
// partition [0, t].
template <class Visit>
std::array<long, kMaxDim> walk_path(int d, double t, Rng& rng, Visit&& visit) {
  std::array<long, kMaxDim> z{};
  double elapsed = 0.0;
  for (;;) {
    double hold = rng.exponential() / (2.0 * d);
    if (elapsed + hold >= t) {
      visit(z, t - elapsed);
      return z;
    }
    visit(z, hold);
    elapsed += hold;
    std::uint64_t pick = rng.below(static_cast<std::uint64_t>(2 * d));
    z[pick >> 1] += (pick & 1) ? 1 : -1;
  }
}

}  // namespace

double total_mass(const SolutionState& state) {
  std::vector<double> terms(state.values.data(), state.values.data() + state.values.size());
  return pairwise_sum(terms);
}

SolutionState evolve(const PotentialField& field, double t, double tol) {
  if (!(t >= 0)) throw std::domain_error("evolve: t must be >= 0");
  if (!(tol > 0)) throw std::domain_error("evolve: tol must be positive");
  const int d = field.box.dim;
  LatticeOperator op{Rect::cube(field.box), field.values, 1.0};
  const long long n = op.rect.count();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  w[origin_index(field.box)] = 1.0;
  if (t == 0.0) return make_state(field, 0.0, w.array());

  const long m = std::min<long long>(40, n);
  Eigen::MatrixXd V(n, m);
  Eigen::VectorXd alpha(m), beta(m), q(n);
  // The operator norm bounds the fastest mode; the first step resolves it.
  double anorm = field.values.abs().maxCoeff() + 4.0 * d;
  double tau = std::min(t, m / std::max(anorm, 1e-12));
  double now = 0.0;

  auto stiffness_error = [&]() {
    double ratio = t * (field.values.maxCoeff() - field.values.minCoeff() + 4.0 * d);
    return std::runtime_error("evolve: step size underflow (stiffness ratio " +
                              std::to_string(ratio) + ")");
  };

  while (now < t) {
    tau = std::min(tau, t - now);
    // Guards both the rejection spiral and glacial accepted steps on
    // pathological potentials.
    if (!(tau >= 1e-14 * std::max(t, 1.0))) throw stiffness_error();
    double beta0 = w.norm();
    long mk = m;
    bool happy = false;
    V.col(0) = w / beta0;
    for (long j = 0; j < m; ++j) {
      op.apply(V.col(j), q);
      alpha[j] = V.col(j).dot(q);
      q -= alpha[j] * V.col(j);
      if (j > 0) q -= beta[j - 1] * V.col(j - 1);
      for (long k = 0; k <= j; ++k) q -= V.col(k).dot(q) * V.col(k);
      beta[j] = q.norm();
      if (beta[j] <= 1e-12 * std::max(1.0, anorm)) {
        mk = j + 1;
        happy = true;  // invariant subspace: the restriction is exact
        break;
      }
      if (j + 1 < m) V.col(j + 1) = q / beta[j];
    }

    Eigen::VectorXd u;
    double err = 0.0;
    for (;;) {
      u = expm_tridiag_e1(alpha.head(mk), beta.head(std::max<long>(mk - 1, 0)), tau);
      err = happy ? 0.0 : std::abs(beta0 * beta[mk - 1] * tau * u[mk - 1]);
      double budget = tol * std::max(beta0, 1.0) * (tau / t);
      if (happy || err <= budget) break;
      tau *= std::clamp(0.9 * std::pow(budget / err, 1.0 / mk), 0.1, 0.9);
      if (!(tau >= 1e-14 * std::max(t, 1.0))) throw stiffness_error();
    }
    w = beta0 * (V.leftCols(mk) * u);
    // The last step lands exactly on t; rounding in now + tau must not leave
    // a sliver behind.
    now = tau >= t - now ? t : now + tau;
    tau *= err > 0.0 ? std::clamp(0.9 * std::pow(tol * std::max(beta0, 1.0) * (tau / t) / err,
                                                 1.0 / mk),
                                  1.0, 2.0)
                     : 2.0;
  }
  return make_state(field, t, w.array().max(0.0));
}

SolutionState evolve_dense(const PotentialField& field, double t) {
  if (!(t >= 0)) throw std::domain_error("evolve_dense: t must be >= 0");
  LatticeOperator op{Rect::cube(field.box), field.values, 1.0};
  if (op.rect.count() > 4096)
    throw std::invalid_argument("evolve_dense: box exceeds 4096 sites; use evolve");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense());
  Eigen::VectorXd coef = es.eigenvectors().row(origin_index(field.box)).transpose();
  Eigen::ArrayXd scaled = (t * es.eigenvalues().array()).exp() * coef.array();
  Eigen::ArrayXd values = (es.eigenvectors() * scaled.matrix()).array();
  return make_state(field, t, values.max(0.0));
}

long evolve_radius(int d, double t, double max_xi_plus) {
  double diffusive = std::ceil(4.0 * std::sqrt(d * t));
  double growth = std::ceil(std::sqrt(t * std::max(0.0, max_xi_plus)));
  return static_cast<long>(diffusive + growth);
}

LocalTimes simulate_walk(int d, double t, Rng& rng) {
  if (!(t >= 0)) throw std::domain_error("simulate_walk: t must be >= 0");
  LocalTimes lt;
  lt.endpoint = walk_path(d, t, rng, [&](const std::array<long, kMaxDim>& z, double hold) {
    lt.times[z] += hold;
  });
  return lt;
}

MeanStderr fk_estimate(const PotentialField& field, double t, long replicas, std::uint64_t seed) {
  if (!(t >= 0)) throw std::domain_error("fk_estimate: t must be >= 0");
  if (replicas <= 0) throw std::domain_error("fk_estimate: need at least one replica");
  const int d = field.box.dim;
  std::vector<double> weights(static_cast<std::size_t>(replicas));
  for (long i = 0; i < replicas; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    double s = 0.0;
    walk_path(d, t, rng, [&](const std::array<long, kMaxDim>& z, double hold) {
      s += hold * field.value_or_zero(z);
    });
    weights[static_cast<std::size_t>(i)] = std::exp(s);
  }
  return mean_stderr(weights);
}

MeanStderr fk_restricted(const PotentialField& field, double t, double R, const ScaleTable& table,
                         long replicas, std::uint64_t seed) {
  if (!(t >= 0)) throw std::domain_error("fk_restricted: t must be >= 0");
  if (replicas <= 0) throw std::domain_error("fk_restricted: need at least one replica");
  const int d = field.box.dim;
  double alpha = alpha_scale(table, t, d);
  const long rad = static_cast<long>(std::ceil(3.0 * R * alpha - 1e-9));
  std::vector<double> weights(static_cast<std::size_t>(replicas));
  for (long i = 0; i < replicas; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    double s = 0.0;
    bool inside = true;
    walk_path(d, t, rng, [&](const std::array<long, kMaxDim>& z, double hold) {
      for (int a = 0; a < d; ++a)
        if (z[a] < -rad || z[a] > rad) inside = false;
      s += hold * field.value_or_zero(z);
    });
    weights[static_cast<std::size_t>(i)] = inside ? std::exp(s) : 0.0;
  }
  return mean_stderr(weights);
}

}  // namespace pam
