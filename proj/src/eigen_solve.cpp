#include "pam/eigen_solve.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace pam {

void LatticeOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const long long n = rect.count();
  y.resize(n);
  std::array<long long, kMaxDim> stride{};
  long long s = 1;
  for (int a = rect.dim - 1; a >= 0; --a) {
    stride[a] = s;
    s *= rect.len(a);
  }
  std::array<long, kMaxDim> z = rect.lo;  // odometer over sites
  const double diag = -2.0 * rect.dim * lap_coeff;
  for (long long i = 0; i < n; ++i) {
    double acc = (v[i] + diag) * x[i];
    for (int a = 0; a < rect.dim; ++a) {
      if (z[a] > rect.lo[a]) acc += lap_coeff * x[i - stride[a]];
      if (z[a] < rect.hi[a]) acc += lap_coeff * x[i + stride[a]];
    }
    y[i] = acc;
    for (int a = rect.dim - 1; a >= 0; --a) {
      if (++z[a] <= rect.hi[a]) break;
      z[a] = rect.lo[a];
    }
  }
}

Eigen::MatrixXd LatticeOperator::dense() const {
  const long long n = rect.count();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (long long i = 0; i < n; ++i) {
    m(i, i) = v[i] - 2.0 * rect.dim * lap_coeff;
    auto z = rect.coord_of(i);
    for (int a = 0; a < rect.dim; ++a) {
      for (long step : {-1L, 1L}) {
        auto y = z;
        y[a] += step;
        if (rect.contains(y)) m(i, rect.index_of(y)) = lap_coeff;
      }
    }
  }
  return m;
}

double rayleigh_quotient(const LatticeOperator& op, const Eigen::VectorXd& f) {
  Eigen::VectorXd af;
  op.apply(f, af);
  return f.dot(af) / f.squaredNorm();
}

namespace {

// Nonnegative orientation for the Perron eigenvector.
void orient(Eigen::VectorXd& vec) {
  if (vec.sum() < 0) vec = -vec;
}

}  // namespace

EigenResult principal_eigen_dense(const LatticeOperator& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op.dense());
  EigenResult r;
  const long long n = op.rect.count();
  r.value = solver.eigenvalues()[n - 1];
  r.vector = solver.eigenvectors().col(n - 1);
  orient(r.vector);
  Eigen::VectorXd av;
  op.apply(r.vector, av);
  r.residual = (av - r.value * r.vector).norm();
  r.iterations = 0;
  return r;
}

EigenResult principal_eigen_lanczos(const LatticeOperator& op, double tol, long max_iter) {
  const long long n = op.rect.count();
  const long m_max = std::min<long long>(max_iter, n);
  Eigen::MatrixXd basis(n, m_max);
  Eigen::VectorXd alpha(m_max), beta(m_max);
  Eigen::VectorXd w(n);

  basis.col(0).setOnes();
  basis.col(0) /= basis.col(0).norm();
  double best_value = 0.0, best_residual = 0.0;
  long k = 0;
  bool breakdown = false;
  while (k < m_max) {
    op.apply(basis.col(k), w);
    alpha[k] = basis.col(k).dot(w);
    w -= alpha[k] * basis.col(k);
    if (k > 0) w -= beta[k - 1] * basis.col(k - 1);
    // Full reorthogonalization, twice for safety.
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    beta[k] = w.norm();
    ++k;
    breakdown = beta[k - 1] < 1e-14 * std::max(1.0, std::abs(alpha[0]));
    if (breakdown || k == m_max || k % 8 == 0) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
      for (long i = 0; i < k; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tsolve(t);
      best_value = tsolve.eigenvalues()[k - 1];
      Eigen::VectorXd y = tsolve.eigenvectors().col(k - 1);
      best_residual = breakdown ? 0.0 : beta[k - 1] * std::abs(y[k - 1]);
      if (best_residual <= tol || breakdown) {
        EigenResult r;
        r.value = best_value;
        r.vector = basis.leftCols(k) * y;
        r.vector /= r.vector.norm();
        orient(r.vector);
        Eigen::VectorXd av;
        op.apply(r.vector, av);
        r.residual = (av - r.value * r.vector).norm();
        r.iterations = k;
        if (r.residual <= tol || breakdown) return r;
        best_residual = r.residual;
      }
    }
    if (breakdown) break;
    if (k < m_max) basis.col(k) = w / beta[k - 1];
  }
  throw EigenError("principal_eigen_lanczos: not converged", best_value, best_residual);
}

EigenResult principal_eigen(const LatticeOperator& op, double tol) {
  if (op.rect.count() <= 400) return principal_eigen_dense(op);
  return principal_eigen_lanczos(op, tol);
}

EigenResult principal_eigen_discrete(const BoxSpec& box, const Eigen::ArrayXd& v, double tol) {
  if (!(tol > 0)) throw std::domain_error("principal_eigen_discrete: tol must be positive");
  if (box.site_count() != v.size())
    throw std::invalid_argument("principal_eigen_discrete: value count does not match box");
  LatticeOperator op{Rect::cube(box), v, 1.0};
  return principal_eigen(op, tol);
}

}  // namespace pam
