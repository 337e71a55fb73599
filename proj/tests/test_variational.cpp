#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "pam/grid.hpp"
#include "pam/rng.hpp"
#include "pam/variational.hpp"

using namespace pam;

namespace {

constexpr double kPi = std::numbers::pi;

// Hand-derived reference values for the Gaussian optimizers at rho = 1, d = 1.
constexpr double kChi11 = 1.5723649429247001;       // chi(1, 1) = 1 - log(1/pi)/2
constexpr double kLambdaHat11 = -0.5723649429247001;  // principal eigenvalue at psi_hat
constexpr double kEntropyHat11 = -1.0723649429247;    // H(ghat^2) = (log(1/pi) - 1)/2

GridFunction normalized(GridFunction g) {
  double mass = integrate_with(g, [](double v, long long) { return v * v; });
  g.values /= std::sqrt(mass);
  return g;
}

}  // namespace

TEST_CASE("chi closed form") {
  CHECK(chi_closed_form(1.0, 1) == doctest::Approx(kChi11).epsilon(1e-14));
  CHECK(chi_closed_form(kPi, 1) == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(chi_closed_form(kPi, 2) == doctest::Approx(2.0 * kPi).epsilon(1e-14));
  CHECK(chi_closed_form(1.0, 2) == doctest::Approx(2.0 * kChi11).epsilon(1e-14));
  CHECK_THROWS_AS(chi_closed_form(0.0, 1), std::domain_error);
  CHECK_THROWS_AS(chi_closed_form(-1.0, 2), std::domain_error);
  CHECK_THROWS_AS(chi_closed_form(1.0, 0), std::domain_error);
}

TEST_CASE("parabola and gaussian profiles") {
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  GridFunction psi = parabola_psi_hat(1.0, 1, grid);
  GridFunction ghat = gaussian_g_hat(1.0, 1, grid);

  // Center value 1 + log(1/pi)/2 and exact parabolic drop.
  long long center = grid.index_of({grid.half()});
  CHECK(psi.values[center] == doctest::Approx(0.4276350570753).epsilon(1e-12));
  for (long k : {7L, 40L, 121L}) {
    long long plus = grid.index_of({grid.half() + k});
    long long minus = grid.index_of({grid.half() - k});
    CHECK(psi.values[plus] == doctest::Approx(psi.values[minus]).epsilon(1e-13));
    double drop = psi.values[center] - psi.values[plus];
    CHECK(drop == doctest::Approx(0.05 * k * 0.05 * k).epsilon(1e-12));
  }

  // ghat^2 = exp(psi_hat / rho) / e node by node, and unit mass.
  for (long long i = 0; i < grid.node_count(); i += 17) {
    double lhs = ghat.values[i] * ghat.values[i];
    double rhs = std::exp(psi.values[i] - 1.0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
  double mass = integrate_with(ghat, [](double v, long long) { return v * v; });
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

  // Dirichlet energy of ghat converges to rho d / 2 at second order.
  double e1 = dirichlet_energy(gaussian_g_hat(1.0, 1, GridFunction::make(1, 8.0, 0.2)));
  double e2 = dirichlet_energy(gaussian_g_hat(1.0, 1, GridFunction::make(1, 8.0, 0.1)));
  double e3 = dirichlet_energy(ghat);
  CHECK(std::abs(e3 - 0.5) < 1e-3);
  double r12 = std::abs(e1 - 0.5) / std::abs(e2 - 0.5);
  double r23 = std::abs(e2 - 0.5) / std::abs(e3 - 0.5);
  CHECK(r12 > 3.0);
  CHECK(r12 < 5.0);
  CHECK(r23 > 3.0);
  CHECK(r23 < 5.0);

  CHECK_THROWS_AS(parabola_psi_hat(0.0, 1, grid), std::domain_error);
  CHECK_THROWS_AS(gaussian_g_hat(1.0, 2, grid), std::invalid_argument);
}

TEST_CASE("exponential functional") {
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  GridFunction psi = parabola_psi_hat(1.0, 1, grid);
  CHECK(functional_L(psi, 1.0) == doctest::Approx(1.0).epsilon(1e-3));

  GridFunction psi_pi = parabola_psi_hat(kPi, 1, GridFunction::make(1, 4.0, 0.025));
  CHECK(functional_L(psi_pi, kPi) == doctest::Approx(kPi).epsilon(1e-3));

  // Constant field: L = rho exp(c/rho) (2L)^d / e, trapezoid-exact.
  GridFunction flat = GridFunction::make(1, 2.0, 0.1);
  flat.values.setConstant(0.7);
  double expect = 1.3 * std::exp(0.7 / 1.3) * 4.0 / std::exp(1.0);
  CHECK(functional_L(flat, 1.3) == doctest::Approx(expect).epsilon(1e-13));

  // Adding a constant multiplies L by exp(c/rho).
  GridFunction shifted = psi;
  shifted.values += 0.9;
  CHECK(functional_L(shifted, 1.0) ==
        doctest::Approx(std::exp(0.9) * functional_L(psi, 1.0)).epsilon(1e-13));
}

TEST_CASE("entropy functional") {
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  GridFunction ghat = gaussian_g_hat(1.0, 1, grid);
  CHECK(entropy_H(ghat, 1.0) == doctest::Approx(kEntropyHat11).epsilon(1e-3));

  // Uniform density on Q_L: H = -rho log(2L)^d.
  GridFunction flat = GridFunction::make(1, 2.0, 0.25);
  flat.values.setConstant(0.5);
  CHECK(entropy_H(flat, 1.3) == doctest::Approx(-1.3 * std::log(4.0)).epsilon(1e-13));

  // Three-node histogram by hand; the zero node contributes nothing.
  GridFunction hist = GridFunction::make(1, 0.5, 0.5);
  hist.values << 0.0, 2.0, 1.0;
  CHECK(entropy_H(hist, 2.0) == doctest::Approx(8.0 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("gradient matches finite differences") {
  GridFunction g = GridFunction::make(1, 3.0, 0.25);
  Rng rng(41, 0);
  for (long long i = 0; i < g.node_count(); ++i) g.values[i] = 0.5 + rng.uniform();
  GridFunction grad = chi_gradient(g, 1.7);

  const double delta = 1e-5;
  Rng pick(42, 0);
  for (int trial = 0; trial < 20; ++trial) {
    long long k = 1 + static_cast<long long>(pick.below(static_cast<std::uint64_t>(g.node_count() - 2)));
    GridFunction gp = g, gm = g;
    gp.values[k] += delta;
    gm.values[k] -= delta;
    double fd = (functional_J(gp, 1.7) - functional_J(gm, 1.7)) / (2.0 * delta);
    double an = g.h * grad.values[k];  // interior trapezoid weight is h^d
    CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}) < 1e-5);
  }

  // A zero node stays finite: the entropy term vanishes there.
  GridFunction gz = g;
  gz.values[5] = 0.0;
  GridFunction gradz = chi_gradient(gz, 1.7);
  CHECK(std::isfinite(gradz.values[5]));
}

TEST_CASE("interval eigenvalue matches the exact discrete formula") {
  for (double h : {0.1, 0.05}) {
    GridFunction psi = GridFunction::make(1, 1.0, h);
    psi.values.setZero();
    double lam = eigen_continuum(psi, 1e-10);
    long N = std::lround(2.0 / h);
    double exact_h = -(2.0 / (h * h)) * (1.0 - std::cos(kPi / N));
    CHECK(lam == doctest::Approx(exact_h).epsilon(1e-10));
  }
  // Second-order march toward -pi^2/4.
  double cont = -kPi * kPi / 4.0;
  GridFunction a = GridFunction::make(1, 1.0, 0.1);
  a.values.setZero();
  GridFunction b = GridFunction::make(1, 1.0, 0.05);
  b.values.setZero();
  double ea = std::abs(eigen_continuum(a, 1e-10) - cont);
  double eb = std::abs(eigen_continuum(b, 1e-10) - cont);
  CHECK(ea < 6e-3);
  CHECK(eb < 1.5e-3);
  CHECK(ea / eb > 3.0);
  CHECK(ea / eb < 5.0);
}

TEST_CASE("parabolic well eigenvalue and shift rule") {
  GridFunction grid = GridFunction::make(1, 6.0, 0.05);
  GridFunction psi = parabola_psi_hat(1.0, 1, grid);
  double lam = eigen_continuum(psi, 1e-10);
  CHECK(lam == doctest::Approx(kLambdaHat11).epsilon(1e-3));

  GridFunction shifted = psi;
  shifted.values += 2.5;
  CHECK(eigen_continuum(shifted, 1e-10) == doctest::Approx(lam + 2.5).epsilon(1e-8));

  // d = 2: lambda(psi_hat) = rho(1 - d) + rho (d/2) log(rho/pi).
  GridFunction grid2 = GridFunction::make(2, 4.0, 0.05);
  GridFunction psi2 = parabola_psi_hat(1.0, 2, grid2);
  double exact2 = -1.0 + std::log(1.0 / kPi);
  CHECK(eigen_continuum(psi2, 1e-10) == doctest::Approx(exact2).epsilon(2e-3));
}

TEST_CASE("legendre duality gap") {
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  GridFunction psi = parabola_psi_hat(1.0, 1, grid);
  GridFunction ghat = gaussian_g_hat(1.0, 1, grid);
  CHECK(std::abs(legendre_gap(psi, ghat, 1.0)) < 1e-3);

  // Uniform pair where the continuum gap is exactly zero.
  GridFunction flat = GridFunction::make(1, 2.0, 0.1);
  flat.values.setConstant(1.4 * (1.0 - std::log(4.0)));
  GridFunction gu = flat;
  gu.values.setConstant(0.5);
  CHECK(std::abs(legendre_gap(flat, gu, 1.4)) < 1e-12);

  // Duality: the gap is nonnegative for arbitrary pairs.
  Rng rng(97, 0);
  for (int trial = 0; trial < 10; ++trial) {
    GridFunction p = GridFunction::make(1, 4.0, 0.1);
    for (long long i = 0; i < p.node_count(); ++i) p.values[i] = -2.0 + 3.0 * rng.uniform();
    GridFunction g = p;
    for (long long i = 0; i < g.node_count(); ++i) g.values[i] = 0.05 + rng.uniform();
    g = normalized(g);
    CHECK(legendre_gap(p, g, 0.8) >= -1e-6);
  }

  GridFunction bad = ghat;
  bad.values *= 1.1;
  CHECK_THROWS_AS(legendre_gap(psi, bad, 1.0), std::domain_error);
}

TEST_CASE("relative entropy") {
  GridFunction p = GridFunction::make(1, 0.5, 0.5);
  p.values << 2.0, 0.0, 2.0;  // point masses 1/2, 0, 1/2
  CHECK(relative_entropy(p, p) == doctest::Approx(0.0).epsilon(1e-15));

  GridFunction q = p;
  q.values << 1.0, 0.0, 3.0;  // point masses 1/4, 0, 3/4
  double kl = relative_entropy(p, q);
  CHECK(kl == doctest::Approx(0.1438410362258904).epsilon(1e-12));

  // Pinsker: KL >= 2 TV^2.
  double l1 = integrate_with(p, [&q](double v, long long i) { return std::abs(v - q.values[i]); });
  CHECK(kl >= 2.0 * (0.5 * l1) * (0.5 * l1));

  // Absolute continuity failure signals +infinity.
  GridFunction q0 = p;
  q0.values << 0.0, 1.0, 2.0;
  CHECK(std::isinf(relative_entropy(p, q0)));

  GridFunction un = p;
  un.values << 2.0, 1.0, 2.0;
  CHECK_THROWS_AS(relative_entropy(un, q), std::domain_error);
  CHECK_THROWS_AS(relative_entropy(p, un), std::domain_error);
  GridFunction neg = p;
  neg.values << 3.0, 2.0, -1.0;
  CHECK_THROWS_AS(relative_entropy(neg, q), std::domain_error);
}

TEST_CASE("entropy rate of nonnegative profiles") {
  GridFunction one = GridFunction::make(1, 2.0, 0.1);
  one.values.setConstant(1.0);
  CHECK(rate_H_R(one, 2.3) == doctest::Approx(0.0).epsilon(1e-15));

  GridFunction c = one;
  c.values.setConstant(1.7);
  CHECK(rate_H_R(c, 0.6) == doctest::Approx(0.6 * 4.0 * 1.7 * std::log(1.7)).epsilon(1e-13));

  // f = e ghat^2: rate = e (1 + H(ghat^2)) for rho = 1.
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  GridFunction ghat = gaussian_g_hat(1.0, 1, grid);
  GridFunction f = grid;
  f.values = std::exp(1.0) * ghat.values.square();
  double expect = std::exp(1.0) * (1.0 + kEntropyHat11);
  CHECK(rate_H_R(f, 1.0) == doctest::Approx(expect).epsilon(1e-3));

  GridFunction neg = one;
  neg.values[3] = -0.1;
  CHECK_THROWS_AS(rate_H_R(neg, 1.0), std::domain_error);
}

TEST_CASE("descent reaches the closed-form minimum") {
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  VariationalResult r = minimize_chi(1.0, 1, grid, {});
  CHECK(r.converged);
  CHECK(r.feasibility_residual < 1e-10);
  CHECK(std::abs(r.value - kChi11) / kChi11 < 0.02);
  CHECK(r.value > kChi11 - chi_slack(1.0, 1, grid.h, grid.L));

  // Discretized optimizer recovers the Gaussian profile up to best shift.
  GridFunction wide = GridFunction::make(1, 12.0, 0.05);
  VariationalResult rw = minimize_chi(1.0, 1, wide, {});
  CHECK(nearest_translate_distance(rw.minimizer, 1.0, 4.0) < 0.02);

  // rho = pi on its natural window.
  GridFunction gpi = GridFunction::make(1, 8.0 / std::sqrt(kPi), 0.05);
  VariationalResult rpi = minimize_chi(kPi, 1, gpi, {});
  CHECK(std::abs(rpi.value - kPi) / kPi < 0.02);
}

TEST_CASE("gaussian start needs only a short polish") {
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  GridFunction ghat = gaussian_g_hat(1.0, 1, grid);
  ChiOptions opts;
  opts.gtol = 1e-4;
  std::vector<TraceRow> trace;
  opts.trace = &trace;
  VariationalResult r = minimize_chi(1.0, 1, grid, opts, ghat);
  CHECK(r.converged);
  CHECK(r.grad_norm <= 1e-4);
  CHECK(r.iterations <= 40);
  CHECK(trace.size() == static_cast<std::size_t>(r.iterations) + 1);
  CHECK(trace.front().grad_norm < 2e-3);  // already nearly critical at the start
}

TEST_CASE("minimum value is invariant under translated starts") {
  GridFunction grid = GridFunction::make(1, 8.0, 0.05);
  GridFunction g0 = gaussian_g_hat(1.0, 1, grid);
  GridFunction g1 = grid;
  g1.fill([](const std::array<double, kMaxDim>& x) {
    return std::pow(1.0 / kPi, 0.25) * std::exp(-0.5 * (x[0] - 0.5) * (x[0] - 0.5));
  });
  VariationalResult r0 = minimize_chi(1.0, 1, grid, {}, g0);
  VariationalResult r1 = minimize_chi(1.0, 1, grid, {}, g1);
  CHECK(std::abs(r0.value - r1.value) < 1e-6);
}

TEST_CASE("log-sobolev inequality on random unit fields") {
  // One dimension.
  {
    GridFunction grid = GridFunction::make(1, 8.0, 0.05);
    double floor = kChi11 - chi_slack(1.0, 1, grid.h, grid.L);
    Rng rng(4057, 0);
    for (int trial = 0; trial < 60; ++trial) {
      GridFunction g = grid;
      if (trial < 40) {
        double s = -2.0 + 4.0 * rng.uniform();
        double a = 0.5 * rng.uniform();
        double w = 0.5 + 2.5 * rng.uniform();
        double phase = 2.0 * kPi * rng.uniform();
        g.fill([&](const std::array<double, kMaxDim>& x) {
          double u = x[0] - s;
          return std::exp(-0.5 * u * u) * (1.0 + a * std::sin(w * x[0] + phase));
        });
      } else {
        for (long long i = 0; i < g.node_count(); ++i) g.values[i] = rng.uniform();
      }
      g = normalized(g);
      CHECK(functional_J(g, 1.0) >= floor);
    }
  }
  // Two dimensions.
  {
    GridFunction grid = GridFunction::make(2, 4.0, 0.1);
    double floor = 2.0 * kChi11 - chi_slack(1.0, 2, grid.h, grid.L);
    Rng rng(4057, 1);
    for (int trial = 0; trial < 40; ++trial) {
      GridFunction g = grid;
      if (trial < 25) {
        double s0 = -1.0 + 2.0 * rng.uniform();
        double s1 = -1.0 + 2.0 * rng.uniform();
        double a = 0.5 * rng.uniform();
        double w = 0.5 + 2.0 * rng.uniform();
        g.fill([&](const std::array<double, kMaxDim>& x) {
          double u0 = x[0] - s0, u1 = x[1] - s1;
          return std::exp(-0.5 * (u0 * u0 + u1 * u1)) *
                 (1.0 + a * std::sin(w * (x[0] + x[1])));
        });
      } else {
        for (long long i = 0; i < g.node_count(); ++i) g.values[i] = rng.uniform();
      }
      g = normalized(g);
      CHECK(functional_J(g, 1.0) >= floor);
    }
  }
}

TEST_CASE("discretization slack brackets the measured deficit") {
  struct Case {
    double rho;
    int d;
    double L;
    double h;
  };
  for (Case c : {Case{1.0, 1, 8.0, 0.2}, Case{1.0, 1, 8.0, 0.1}, Case{kPi, 1, 4.0, 0.1},
                 Case{1.0, 2, 4.0, 0.1}}) {
    GridFunction grid = GridFunction::make(c.d, c.L, c.h);
    GridFunction ghat = gaussian_g_hat(c.rho, c.d, grid);
    double deficit = chi_closed_form(c.rho, c.d) - functional_J(ghat, c.rho);
    double slack = chi_slack(c.rho, c.d, c.h, grid.L);
    CHECK(deficit > 0.0);
    CHECK(deficit < 0.5 * slack);   // slack covers the deficit with margin
    CHECK(deficit > slack / 6.0);   // but is not orders of magnitude loose
  }
}

TEST_CASE("spectral, variational, and closed-form routes agree") {
  GridFunction grid = GridFunction::make(1, 6.0, 0.05);
  GridFunction psi = parabola_psi_hat(1.0, 1, grid);
  double lam = eigen_continuum(psi, 1e-10);
  double ell = functional_L(psi, 1.0);
  double chi_spectral = ell - lam;
  double chi_descent = minimize_chi(1.0, 1, GridFunction::make(1, 8.0, 0.05), {}).value;
  double chi = chi_closed_form(1.0, 1);
  CHECK(std::abs(chi_spectral - chi) / chi < 0.02);
  CHECK(std::abs(chi_descent - chi) / chi < 0.02);
  CHECK(std::abs(ell - 1.0) < 1e-3);
}

TEST_CASE("translate-constrained minimum") {
  // eps = 0 reduces to the unconstrained problem, bit for bit.
  GridFunction grid = GridFunction::make(1, 6.0, 0.1);
  ConstrainedChiResult r0 = minimize_chi_constrained(1.0, 1, 0.0, 2.0, grid, {});
  VariationalResult plain = minimize_chi(1.0, 1, grid, {});
  CHECK(r0.best.value == plain.value);
  CHECK((r0.best.minimizer.values == plain.minimizer.values).all());

  // Forcing the profile away from the Gaussian family costs energy.
  ConstrainedChiResult rc = minimize_chi_constrained(1.0, 1, 0.3, 2.0, grid, {});
  CHECK(rc.best.feasibility_residual <= 1e-6);
  CHECK(rc.best.converged);
  CHECK(rc.best.value > plain.value + 0.01);
  CHECK(rc.start_values.size() == 8);
  for (double v : rc.start_violations) CHECK(v <= 1e-6);

  // Unreachable distance demands are rejected.
  CHECK_THROWS_AS(minimize_chi_constrained(1.0, 1, 2.0, 2.0, grid, {}), std::domain_error);
  // The window must be exactly Q_{3R} and R grid-aligned.
  CHECK_THROWS_AS(minimize_chi_constrained(1.0, 1, 0.3, 1.5, grid, {}), std::invalid_argument);
  GridFunction off = GridFunction::make(1, 6.0, 0.07);
  CHECK_THROWS_AS(minimize_chi_constrained(1.0, 1, 0.3, 2.0, off, {}), std::invalid_argument);
}

TEST_CASE("nearest translate distance") {
  GridFunction grid = GridFunction::make(1, 6.0, 0.1);
  GridFunction ghat = gaussian_g_hat(1.0, 1, grid);
  CHECK(nearest_translate_distance(ghat, 1.0, 2.0) == doctest::Approx(0.0).epsilon(1e-12));

  // A shifted copy is matched by the corresponding lattice shift.
  GridFunction moved = grid;
  moved.fill([](const std::array<double, kMaxDim>& x) {
    return std::pow(1.0 / kPi, 0.25) * std::exp(-0.5 * (x[0] - 0.7) * (x[0] - 0.7));
  });
  CHECK(nearest_translate_distance(moved, 1.0, 2.0) < 1e-6);

  // Far-off profiles score near the maximal value: mass(g^2) + mass(ghat^2).
  GridFunction flat = grid;
  flat.values.setConstant(0.1);
  double dist = nearest_translate_distance(flat, 1.0, 2.0);
  CHECK(dist > 0.5);
  CHECK_THROWS_AS(nearest_translate_distance(flat, 1.0, 2.05), std::invalid_argument);
}
