#include "pam/confinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pam/eigen_solve.hpp"
#include "pam/evolution.hpp"
#include "pam/variational.hpp"

namespace pam {

namespace {

double pow_int(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// Height of the centered parabola profile at the origin.
double profile_peak(double rho, int d) {
  return rho + rho * 0.5 * d * std::log(rho / std::numbers::pi);
}

// max-shifted log of the pairwise sum of e^{x_i}.
double log_sum_exp(const std::vector<double>& x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  std::vector<double> terms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) terms[i] = std::exp(x[i] - mx);
  return mx + std::log(pairwise_sum(terms));
}

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t k) {
  return mix64(seed ^ mix64(k + 1));
}

// Lattice cells [z/alpha, (z+1)/alpha) meeting Q_W, as an inclusive z-range.
// Boundary cells whose overlap is thinner than the 1e-9 snap are dropped, so
// a W*alpha sitting one rounding error above an integer never demands an
// extra lattice site.
Rect cell_range(int d, double W, double alpha) {
  Rect r;
  r.dim = d;
  for (int a = 0; a < d; ++a) {
    r.lo[a] = static_cast<long>(std::floor(-W * alpha + 1e-9));
    r.hi[a] = static_cast<long>(std::ceil(W * alpha - 1e-9)) - 1;
  }
  return r;
}

}  // namespace

GlobalDistance dist_global(const ProfileFn& f1, const ProfileFn& f2, int d, int r_max,
                           int subdiv) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dist_global: d must be 1..3");
  if (r_max < 1) throw std::invalid_argument("dist_global: r_max must be >= 1");
  if (subdiv < 1) throw std::invalid_argument("dist_global: subdiv must be >= 1");
  GlobalDistance out;
  for (int r = 1; r <= r_max; ++r) {
    GridFunction g = GridFunction::make(d, r, 1.0 / subdiv);
    g.fill([&](const std::array<double, kMaxDim>& x) { return std::abs(f1(x) - f2(x)); });
    double I = integrate(g);
    out.value += std::ldexp(I / (1.0 + I), -r);
  }
  out.tail_bound = std::ldexp(1.0, -r_max);
  return out;
}

double dist_box(const GridFunction& psi1, const GridFunction& psi2, double rho) {
  if (!(rho > 0)) throw std::invalid_argument("dist_box: rho must be positive");
  if (psi1.d != psi2.d || psi1.half() != psi2.half() || psi1.h != psi2.h)
    throw std::invalid_argument("dist_box: grids must match");
  return integrate_with(psi1, [&](double v, long long i) {
    return std::abs(std::exp(v / rho) - std::exp(psi2.values[i] / rho));
  });
}

ShiftGrid make_shift_grid(int d, double extent, double spacing) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("make_shift_grid: d must be 1..3");
  if (!(spacing > 0)) throw std::invalid_argument("make_shift_grid: spacing must be positive");
  if (!(extent >= 0)) throw std::invalid_argument("make_shift_grid: extent must be >= 0");
  double ratio = extent / spacing;
  long half = std::lround(ratio);
  if (std::abs(ratio - half) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("make_shift_grid: extent must be a multiple of spacing");
  ShiftGrid grid;
  grid.d = d;
  grid.extent = extent;
  grid.spacing = spacing;
  long per_axis = 2 * half + 1;
  long long count = 1;
  for (int a = 0; a < d; ++a) count *= per_axis;
  grid.shifts.reserve(count);
  for (long long idx = 0; idx < count; ++idx) {
    std::array<double, kMaxDim> s{};
    long long rem = idx;
    for (int a = d - 1; a >= 0; --a) {
      s[a] = (static_cast<long>(rem % per_axis) - half) * spacing;
      rem /= per_axis;
    }
    grid.shifts.push_back(s);
  }
  return grid;
}

ShapeDistance best_shift_distance(const ProfileFn& psi, int d, double R, double M, double rho,
                                  const ShiftGrid& shifts, double h) {
  if (shifts.shifts.empty()) throw std::domain_error("best_shift_distance: empty shift grid");
  if (shifts.d != d) throw std::invalid_argument("best_shift_distance: shift dimension mismatch");
  if (!(R > 0) || !(rho > 0) || !(h > 0))
    throw std::invalid_argument("best_shift_distance: R, rho, h must be positive");
  long half = std::max(1L, std::lround(R / h));
  GridFunction win = GridFunction::make(d, R, R / half);
  GridFunction hat = parabola_psi_hat(rho, d, win);
  Eigen::ArrayXd target = (hat.values / rho).exp();

  ShapeDistance out;
  out.M = M;
  out.R = R;
  out.value = std::numeric_limits<double>::infinity();
  std::vector<double> terms(win.node_count());
  for (const auto& s : shifts.shifts) {
    for (long long i = 0; i < win.node_count(); ++i) {
      std::array<double, kMaxDim> y = win.point_of(i);
      for (int a = 0; a < d; ++a) y[a] += s[a];
      double v = std::min(psi(y), M);
      terms[i] = win.node_weight(i) * std::abs(std::exp(v / rho) - target[i]);
    }
    double val = pairwise_sum(terms);
    if (val < out.value) {
      out.value = val;
      out.argmin_shift = s;
    }
  }
  return out;
}

double functional_F_log(const GridFunction& psi, double t, double rho, const ScaleTable& table) {
  if (!(rho > 0)) throw std::invalid_argument("functional_F_log: rho must be positive");
  double alpha = alpha_scale(table, t, psi.d);
  return t / (alpha * alpha) * rho * log_integral_exp(psi, rho);
}

bool functional_L_within(const GridFunction& psi, double band, double rho) {
  if (!(band >= 0)) throw std::invalid_argument("functional_L_within: band must be >= 0");
  return std::abs(functional_L(psi, rho) - rho) <= band;
}

RateCheck cumulant_rate_check(const ScaleTable& table, const GridFunction& f, double rho,
                              double t, int subdiv) {
  if ((f.values < 0.0).any()) throw std::domain_error("cumulant_rate_check: f must be >= 0");
  if (subdiv < 1) throw std::invalid_argument("cumulant_rate_check: subdiv must be >= 1");
  const int d = f.d;
  const double R = f.L;
  const double alpha = alpha_scale(table, t, d);
  const double beta = t / pow_int(alpha, d);
  const double h_beta = table.h(beta);

  Rect cells = cell_range(d, R, alpha);
  long long sub_pts = 1;
  for (int a = 0; a < d; ++a) sub_pts *= subdiv;
  std::vector<double> terms;
  terms.reserve(cells.count());
  for (long long idx = 0; idx < cells.count(); ++idx) {
    auto z = cells.coord_of(idx);
    std::array<double, kMaxDim> lo{}, len{};
    double vol = 1.0;
    for (int a = 0; a < d; ++a) {
      lo[a] = std::max(z[a] / alpha, -R);
      len[a] = std::min((z[a] + 1) / alpha, R) - lo[a];
      vol *= len[a];
    }
    if (!(vol > 0)) continue;
    double acc = 0.0;
    for (long long p = 0; p < sub_pts; ++p) {
      std::array<double, kMaxDim> x{};
      long long rem = p;
      for (int a = d - 1; a >= 0; --a) {
        long j = static_cast<long>(rem % subdiv);
        rem /= subdiv;
        x[a] = lo[a] + (j + 0.5) * len[a] / subdiv;
      }
      acc += f.value_at(x);
    }
    double c = vol * acc / static_cast<double>(sub_pts);
    if (c > 0) terms.push_back(table.h(t * c) - c * pow_int(alpha, d) * h_beta);
  }
  RateCheck out;
  out.finite_t = alpha * alpha / t * pairwise_sum(terms);
  out.limit = rate_H_R(f, rho);
  return out;
}

double profile_log_integral(const ShiftRescale& sr, double W, double M, double rho) {
  if (!(W > 0) || !(rho > 0))
    throw std::invalid_argument("profile_log_integral: W, rho must be positive");
  const BoxSpec& box = sr.xi_t.box;
  const int d = box.dim;
  const double alpha = sr.alpha;
  Rect cells = cell_range(d, W, alpha);
  long need = 0;
  for (int a = 0; a < d; ++a) need = std::max({need, -cells.lo[a], cells.hi[a]});
  if (need > box.m())
    throw std::invalid_argument("profile_log_integral: field box radius " +
                                std::to_string(box.m()) + " too small; need " +
                                std::to_string(need));
  std::vector<double> ex;
  ex.reserve(cells.count());
  for (long long idx = 0; idx < cells.count(); ++idx) {
    auto z = cells.coord_of(idx);
    double vol = 1.0;
    for (int a = 0; a < d; ++a)
      vol *= std::min((z[a] + 1) / alpha, W) - std::max(z[a] / alpha, -W);
    if (!(vol > 0)) continue;
    double v = std::min(alpha * alpha * sr.xi_t.values[box.index_of(z)], M);
    ex.push_back(std::log(vol) + v / rho);
  }
  return log_sum_exp(ex);
}

MomentEstimate annealed_F_moment(const ScaleTable& table, int d, double t, double R, double rho,
                                 double K, double M, long replicas, std::uint64_t seed) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("annealed_F_moment: d must be 1..3");
  if (!(R > 0) || !(rho > 0) || !(K > 0))
    throw std::invalid_argument("annealed_F_moment: R, rho, K must be positive");
  if (replicas < 1) throw std::invalid_argument("annealed_F_moment: replicas must be >= 1");
  const double alpha = alpha_scale(table, t, d);
  const long r3 = std::max(1L, static_cast<long>(std::ceil(3.0 * R * alpha - 1e-9)));
  const BoxSpec box = BoxSpec::lattice_box(d, r3);

  std::vector<double> ex(replicas);
  for (long i = 0; i < replicas; ++i) {
    PotentialField fld = sample_field(table.dist(), box, replica_seed(seed, i));
    ShiftRescale sr = shift_rescale(fld, t, table);
    ex[i] = t / (alpha * alpha) * K * profile_log_integral(sr, 3.0 * R, M, rho);
  }

  double mx = *std::max_element(ex.begin(), ex.end());
  std::vector<double> u(replicas), u2(replicas);
  for (long i = 0; i < replicas; ++i) {
    u[i] = std::exp(ex[i] - mx);
    u2[i] = u[i] * u[i];
  }
  MeanStderr ms = mean_stderr(u);
  MomentEstimate out;
  out.rate = alpha * alpha / t * (mx + std::log(ms.mean));
  out.se = alpha * alpha / t * (ms.stderr_ / ms.mean);
  double s = pairwise_sum(u);
  out.ess = s * s / pairwise_sum(u2);
  out.low_ess = out.ess < 10.0;
  return out;
}

MomentIdentity multinomial_identity(const std::vector<double>& atom_values,
                                    const std::vector<double>& atom_probs, int sites, double c,
                                    int D) {
  const std::size_t atoms = atom_values.size();
  if (atoms == 0 || atom_probs.size() != atoms)
    throw std::invalid_argument("multinomial_identity: atom lists must match and be nonempty");
  double psum = 0.0;
  for (double p : atom_probs) {
    if (!(p > 0)) throw std::invalid_argument("multinomial_identity: probabilities must be > 0");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-12)
    throw std::invalid_argument("multinomial_identity: probabilities must sum to 1");
  if (sites < 1 || D < 0) throw std::invalid_argument("multinomial_identity: need sites >= 1, D >= 0");
  double combos = std::pow(static_cast<double>(atoms), sites);
  if (combos > 2e6) throw std::invalid_argument("multinomial_identity: enumeration too large");

  MomentIdentity out;
  long long total = static_cast<long long>(combos + 0.5);
  for (long long a = 0; a < total; ++a) {
    long long rem = a;
    double p = 1.0, s = 0.0;
    for (int j = 0; j < sites; ++j) {
      std::size_t k = static_cast<std::size_t>(rem % atoms);
      rem /= atoms;
      p *= atom_probs[k];
      s += std::exp(c * atom_values[k]);
    }
    out.enumerated += p * std::pow(s, D);
  }

  // per-site moment <e^{c k xi}> for k = 0..D
  std::vector<double> m(D + 1);
  for (int k = 0; k <= D; ++k) {
    double acc = 0.0;
    for (std::size_t a = 0; a < atoms; ++a) acc += atom_probs[a] * std::exp(c * k * atom_values[a]);
    m[k] = acc;
  }
  auto binom = [](int n, int k) {
    double b = 1.0;
    for (int j = 1; j <= k; ++j) b = b * (n - k + j) / j;
    return b;
  };
  // compositions k_1+...+k_n = D, coefficient prod of nested binomials
  auto dfs = [&](auto&& self, int site, int remaining, double coeff) -> double {
    if (site == sites - 1) return coeff * m[remaining];
    double acc = 0.0;
    for (int k = 0; k <= remaining; ++k)
      acc += self(self, site + 1, remaining - k, coeff * binom(remaining, k) * m[k]);
    return acc;
  };
  out.regrouped = dfs(dfs, 0, D, 1.0);
  return out;
}

TiltSpec default_tilt(const ScaleTable& table, int d, double t, double R, double rho) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("default_tilt: d must be 1..3");
  if (!(R > 0) || !(rho > 0))
    throw std::invalid_argument("default_tilt: R, rho must be positive");
  const double alpha = alpha_scale(table, t, d);
  const long r3 = std::max(1L, static_cast<long>(std::ceil(3.0 * R * alpha - 1e-9)));
  TiltSpec tilt;
  tilt.box = BoxSpec::lattice_box(d, r3);
  tilt.theta = Eigen::ArrayXd(tilt.box.site_count());
  tilt.log_norm = Eigen::ArrayXd(tilt.box.site_count());
  const double peak = profile_peak(rho, d);
  const double scale = t / pow_int(alpha, d);
  for (long long i = 0; i < tilt.box.site_count(); ++i) {
    auto z = tilt.box.coord_of(i);
    double x2 = 0.0;
    for (int a = 0; a < d; ++a) x2 += (z[a] / alpha) * (z[a] / alpha);
    double hat = peak - rho * rho * x2;
    tilt.theta[i] = scale * std::exp(hat / rho - 1.0);
    tilt.log_norm[i] = table.h(tilt.theta[i]);
  }
  return tilt;
}

ConfinementReport confinement_experiment(const ScaleTable& table, const ConfinementOptions& opts) {
  if (opts.t_grid.empty() || opts.eps_grid.empty())
    throw std::invalid_argument("confinement_experiment: t_grid and eps_grid must be nonempty");
  if (opts.d < 1 || opts.d > kMaxDim)
    throw std::invalid_argument("confinement_experiment: d must be 1..3");
  if (!(opts.R > 0) || !(opts.rho > 0))
    throw std::invalid_argument("confinement_experiment: R, rho must be positive");
  if (opts.replicas < 1)
    throw std::invalid_argument("confinement_experiment: replicas must be >= 1");

  std::vector<double> levels;
  if (opts.M > 0) {
    levels = {opts.M};
  } else {
    double m0 = profile_peak(opts.rho, opts.d) + 1.0;
    levels = {m0, 2.0 * m0};
  }
  const double m_top = levels.back();
  const double spacing = opts.shift_spacing > 0 ? opts.shift_spacing : opts.R / 8;
  const double win_h = opts.window_h > 0 ? opts.window_h : opts.R / 40;
  const ShiftGrid shifts = make_shift_grid(opts.d, 2.0 * opts.R, spacing);

  ConfinementReport rep;
  rep.t_grid = opts.t_grid;
  rep.eps_grid = opts.eps_grid;
  rep.R = opts.R;
  rep.M = m_top;
  rep.rho = opts.rho;
  rep.d = opts.d;
  rep.replicas = opts.replicas;
  rep.tilted = opts.tilted;
  rep.seed = opts.seed;

  for (std::size_t ti = 0; ti < opts.t_grid.size(); ++ti) {
    const double t = opts.t_grid[ti];
    const double alpha = alpha_scale(table, t, opts.d);
    const long r3 = std::max(1L, static_cast<long>(std::ceil(3.0 * opts.R * alpha - 1e-9)));
    const BoxSpec box = BoxSpec::lattice_box(opts.d, r3);
    const double cap = m_top / (alpha * alpha);

    TiltSpec tilt;
    std::vector<const TiltedSampler*> site_sampler;
    std::map<double, std::unique_ptr<TiltedSampler>> pool;
    if (opts.tilted) {
      tilt = default_tilt(table, opts.d, t, opts.R, opts.rho);
      site_sampler.resize(box.site_count());
      for (long long j = 0; j < box.site_count(); ++j) {
        auto& slot = pool[tilt.theta[j]];
        if (!slot) slot = std::make_unique<TiltedSampler>(table.dist(), tilt.theta[j]);
        site_sampler[j] = slot.get();
      }
    }

    std::vector<double> lw(opts.replicas), dist(opts.replicas);
    std::vector<std::array<double, kMaxDim>> arg(opts.replicas);
    for (long i = 0; i < opts.replicas; ++i) {
      const std::uint64_t stream =
          static_cast<std::uint64_t>(ti) * static_cast<std::uint64_t>(opts.replicas) +
          static_cast<std::uint64_t>(i);
      PotentialField fld;
      double log_lr = 0.0;
      if (opts.tilted) {
        fld.box = box;
        fld.dist = table.dist();
        fld.seed = opts.seed;
        fld.values = Eigen::ArrayXd(box.site_count());
        Rng rng(opts.seed, stream);
        for (long long j = 0; j < box.site_count(); ++j) fld.values[j] = site_sampler[j]->sample(rng);
        std::vector<double> lr(box.site_count());
        for (long long j = 0; j < box.site_count(); ++j)
          lr[j] = tilt.log_norm[j] - tilt.theta[j] * fld.values[j];
        log_lr = pairwise_sum(lr);
      } else {
        fld = sample_field(table.dist(), box, replica_seed(opts.seed, stream));
      }
      ShiftRescale sr = shift_rescale(fld, t, table);
      Eigen::ArrayXd trunc = sr.xi_t.values.min(cap);
      lw[i] = t * principal_eigen_discrete(box, trunc, 1e-10).value + log_lr;
      ProfileFn profile = [&sr](const std::array<double, kMaxDim>& x) { return sr.xibar_t(x); };
      double dmin = std::numeric_limits<double>::infinity();
      std::array<double, kMaxDim> amin{};
      for (double lev : levels) {
        ShapeDistance sd =
            best_shift_distance(profile, opts.d, opts.R, lev, opts.rho, shifts, win_h);
        if (sd.value < dmin) {
          dmin = sd.value;
          amin = sd.argmin_shift;
        }
      }
      dist[i] = dmin;
      arg[i] = amin;
    }

    double mx = *std::max_element(lw.begin(), lw.end());
    if (!std::isfinite(mx))
      throw std::runtime_error("confinement_experiment: degenerate weights");
    std::vector<double> u(opts.replicas), u2(opts.replicas), masked(opts.replicas);
    for (long i = 0; i < opts.replicas; ++i) {
      u[i] = std::exp(lw[i] - mx);
      u2[i] = u[i] * u[i];
    }
    const double s = pairwise_sum(u);
    rep.ess.push_back(s * s / pairwise_sum(u2));
    rep.ess_low.push_back(rep.ess.back() < opts.ess_floor ? 1 : 0);
    std::vector<double> row;
    row.reserve(opts.eps_grid.size());
    for (double eps : opts.eps_grid) {
      for (long i = 0; i < opts.replicas; ++i) masked[i] = dist[i] > eps ? u[i] : 0.0;
      row.push_back(pairwise_sum(masked) / s);
    }
    rep.tail.push_back(std::move(row));
    if (opts.keep_replicas) {
      rep.log_weights.push_back(std::move(lw));
      rep.distances.push_back(std::move(dist));
      rep.argmin_shifts.push_back(std::move(arg));
    }
  }
  return rep;
}

double intermittency_ratio(const PotentialDistribution& dist, int d, long radius, double p,
                           double q, double t, long replicas, std::uint64_t seed) {
  if (!(p > 0) || !(q >= p))
    throw std::invalid_argument("intermittency_ratio: need 0 < p <= q");
  if (replicas < 1) throw std::invalid_argument("intermittency_ratio: replicas must be >= 1");
  if (!(t >= 0)) throw std::domain_error("intermittency_ratio: t must be >= 0");
  const BoxSpec box = BoxSpec::lattice_box(d, radius);
  std::vector<double> lu(replicas);
  for (long i = 0; i < replicas; ++i) {
    PotentialField fld = sample_field(dist, box, replica_seed(seed, i));
    lu[i] = std::log(total_mass(evolve_dense(fld, t)));
  }
  const double log_n = std::log(static_cast<double>(replicas));
  const double mx = *std::max_element(lu.begin(), lu.end());
  // Shift by max log U before scaling by the moment order: r*(lu - mx) cannot
  // overflow, and a deterministic sample (all lu equal) reduces every moment
  // to mx + 0 exactly, so p < q still returns 1 bitwise.
  auto moment_log = [&](double r) {
    std::vector<double> terms(lu.size());
    for (std::size_t i = 0; i < lu.size(); ++i) terms[i] = std::exp(r * (lu[i] - mx));
    return mx + (std::log(pairwise_sum(terms)) - log_n) / r;
  };
  return std::exp(moment_log(p) - moment_log(q));
}

}  // namespace pam
