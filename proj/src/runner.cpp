#include "pam/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "pam/confinement.hpp"
#include "pam/eigen_solve.hpp"
#include "pam/evolution.hpp"
#include "pam/field.hpp"
#include "pam/grid.hpp"
#include "pam/io.hpp"
#include "pam/scale.hpp"
#include "pam/spectral.hpp"
#include "pam/variational.hpp"

namespace pam {
namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad_config(const std::string& what) {
  throw std::runtime_error("invalid config: " + what);
}

double as_f64(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) bad_config("'" + key + "' must be a number");
  return v.get<double>();
}

long as_long(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) bad_config("'" + key + "' must be an integer");
  return v.get<long>();
}

bool as_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) bad_config("'" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string as_str(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) bad_config("'" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_f64_vec(const nlohmann::json& v, const std::string& key) {
  if (!v.is_array()) bad_config("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) bad_config("'" + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// Subcommand-dependent defaults for the fields left unset; the finalized
// config is what the manifest records.
void finalize(RunConfig& c) {
  const std::string& s = c.subcommand;
  if (c.R == 0.0) {
    if (s == "chi") c.R = 4.0;          // shape-constraint window
    else if (s == "moments") c.R = 0.5; // keeps the annealed ESS healthy at t ~ 1e3
    else c.R = 2.0;
  }
  if (s == "scale") {
    if (c.t_grid.empty())
      for (int k = 0; k <= 14; ++k) c.t_grid.push_back(std::exp(static_cast<double>(k)));
    for (double t : c.t_grid)
      if (t < 1.0) bad_config("scale needs t >= 1 (kappa integrates from 1)");
  } else if (s == "eigen") {
    if (c.t_grid.empty()) c.t_grid = {1e2, 1e3, 1e4};
  } else if (s == "evolve") {
    if (c.t == 0.0) c.t = 1.0;
    if (c.t_grid.empty()) c.t_grid = {c.t};
  } else if (s == "fk") {
    if (c.t == 0.0) c.t = 1.0;
    if (c.t_grid.empty()) c.t_grid = {c.t};
    if (c.replicas == 0) c.replicas = 1000;
  } else if (s == "chi") {
    ;  // time-free
  } else if (s == "ldp") {
    if (c.t_grid.empty()) c.t_grid = {1e3, 1e4, 1e5, 1e6};
  } else if (s == "confine") {
    if (c.t_grid.empty()) c.t_grid = {1e3, 3e3, 1e4};
    if (c.eps_grid.empty())
      for (int k = 0; k <= 12; ++k) c.eps_grid.push_back(k / 10.0);
    if (c.replicas == 0) c.replicas = 200;
  } else if (s == "moments") {
    if (c.t == 0.0) c.t = 2.0;  // intermittency time; the annealed rate uses t_grid
    if (c.t_grid.empty()) c.t_grid = {20.0, 1e2, 1e3};
    if (c.replicas == 0) c.replicas = 400;
  } else {
    bad_config("unknown subcommand '" + s + "'");
  }
  if (c.replicas == 0) c.replicas = 1000;
}

// Tracks every path this run writes so a failure can remove the partial
// output set before the error escapes.
class Sink {
 public:
  explicit Sink(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  fs::path claim(const std::string& name) {
    written_.push_back(dir_ / name);
    return written_.back();
  }

  void csv(const std::string& name, const CsvTable& table) { table.save(claim(name)); }
  void json(const std::string& name, const nlohmann::json& j) { write_json(claim(name), j); }

  // Stem-based exporters write <stem>.f64 + <stem>.json; claim both up front.
  fs::path claim_stem(const std::string& stem) {
    claim(stem + ".f64");
    claim(stem + ".json");
    return dir_ / stem;
  }

  void discard() noexcept {
    for (const fs::path& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(written_.size());
    for (const fs::path& p : written_) out.push_back(p.filename().string());
    return out;
  }

  std::vector<fs::path> take() { return std::move(written_); }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

nlohmann::json axis(const std::string& column, bool log) {
  return {{"column", column}, {"log", log}};
}

// Declarative plot description: which CSV, which column on each axis, log
// scales, optional series grouping. Any plotting tool can consume it.
nlohmann::json plot_spec(const std::string& csv, const nlohmann::json& x,
                         const std::vector<nlohmann::json>& ys, const std::string& group = "") {
  nlohmann::json j{{"csv", csv}, {"x", x}, {"y", ys}};
  if (!group.empty()) j["group"] = group;
  return j;
}

std::string fmt_bool(bool b) { return b ? "1" : "0"; }

void run_scale(const RunConfig& c, Sink& sink) {
  ScaleTable table(c.dist);
  CsvTable tab({"t", "H", "kappa", "alpha"});
  for (double t : c.t_grid) {
    double a = kNan;
    try {
      a = alpha_scale(table, t, c.d);
    } catch (const std::domain_error&) {
      ;  // no alpha at this t; the column says so
    }
    tab.add_row({format_f64(t), format_f64(table.h(t)), format_f64(kappa(table, t)),
                 format_f64(a)});
  }
  sink.csv("scale.csv", tab);
  sink.json("scale.plot.json",
            plot_spec("scale.csv", axis("t", true),
                      {axis("H", false), axis("kappa", false), axis("alpha", false)}));

  CsvTable hk({"t", "diff", "target", "ratio"});
  for (double t : c.t_grid) {
    HkCheck ck = hk_ratio(table, t, c.y, c.rho);
    double ratio = ck.target != 0.0 ? ck.diff / ck.target : kNan;
    hk.add_row({format_f64(t), format_f64(ck.diff), format_f64(ck.target), format_f64(ratio)});
  }
  sink.csv("hk.csv", hk);
  sink.json("hk.plot.json", plot_spec("hk.csv", axis("t", true), {axis("ratio", false)}));
}

void run_eigen(const RunConfig& c, Sink& sink) {
  BoxSpec box = BoxSpec::lattice_box(c.d, c.radius);
  PotentialField field = sample_field(c.dist, box, c.seed);
  EigenResult r = principal_eigen_discrete(box, field.values, c.tol);

  double dense_value = kNan, dense_diff = kNan;
  if (box.site_count() <= 4096) {
    LatticeOperator op{Rect::cube(box), field.values, 1.0};
    dense_value = principal_eigen_dense(op).value;
    dense_diff = std::abs(r.value - dense_value);
  }
  CsvTable tab({"radius", "sites", "value", "iterations", "residual", "dense_value",
                "dense_diff"});
  tab.add_row({format_i64(c.radius), format_i64(box.site_count()), format_f64(r.value),
               format_i64(r.iterations), format_f64(r.residual), format_f64(dense_value),
               format_f64(dense_diff)});
  sink.csv("principal.csv", tab);
  export_eigenvector(r, box, sink.claim_stem("eigenvector"));

  // Rescaled eigenvalue of the zero profile: converges to the Dirichlet value
  // -d pi^2 / (2R)^2 as alpha grows.
  ScaleTable table(c.dist);
  const double limit = -c.d * std::numbers::pi * std::numbers::pi / (4.0 * c.R * c.R);
  CsvTable rs({"t", "alpha", "value", "limit"});
  for (double t : c.t_grid) {
    double a = alpha_scale(table, t, c.d);
    GridFunction psi = GridFunction::make(c.d, c.R, 1.0 / (4.0 * std::ceil(a)));
    psi.values.setZero();
    rs.add_row({format_f64(t), format_f64(a),
                format_f64(rescaled_eigen(psi, c.R, t, table, c.tol)), format_f64(limit)});
  }
  sink.csv("rescaled.csv", rs);
  sink.json("rescaled.plot.json",
            plot_spec("rescaled.csv", axis("t", true),
                      {axis("value", false), axis("limit", false)}));
}

void run_evolve(const RunConfig& c, Sink& sink) {
  PotentialField field = sample_field(c.dist, BoxSpec::lattice_box(c.d, c.radius), c.seed);
  CsvTable tab({"t", "mass", "max_value"});
  int idx = 0;
  for (double t : c.t_grid) {
    SolutionState st = evolve(field, t, c.tol);
    tab.add_row({format_f64(t), format_f64(total_mass(st)), format_f64(st.values.maxCoeff())});
    char stem[32];
    std::snprintf(stem, sizeof stem, "solution_%03d", idx++);
    export_solution(st, sink.claim_stem(stem));
  }
  sink.csv("mass.csv", tab);
  sink.json("mass.plot.json", plot_spec("mass.csv", axis("t", false), {axis("mass", true)}));
}

void run_fk(const RunConfig& c, Sink& sink) {
  PotentialField field = sample_field(c.dist, BoxSpec::lattice_box(c.d, c.radius), c.seed);
  CsvTable tab({"t", "mean", "stderr", "N", "seed"});
  for (double t : c.t_grid) {
    MeanStderr ms = fk_estimate(field, t, c.replicas, c.seed);
    tab.add_row({format_f64(t), format_f64(ms.mean), format_f64(ms.stderr_),
                 format_i64(c.replicas), format_u64(c.seed)});
  }
  sink.csv("fk.csv", tab);
  sink.json("fk.plot.json", plot_spec("fk.csv", axis("t", false), {axis("mean", true)}));
}

double unit_mass_normalize(GridFunction& g) {
  double mass = integrate_with(g, [](double v, long long) { return v * v; });
  g.values /= std::sqrt(mass);
  return mass;
}

void run_chi(const RunConfig& c, Sink& sink) {
  GridFunction grid = GridFunction::make(c.d, c.L, c.h);
  ChiOptions opts;
  opts.seed = c.seed;
  opts.threads = c.threads;
  std::vector<TraceRow> trace;
  opts.trace = &trace;
  VariationalResult r = minimize_chi(c.rho, c.d, grid, opts);
  const double closed = chi_closed_form(c.rho, c.d);
  const double rel = closed != 0.0 ? std::abs(r.value - closed) / std::abs(closed) : kNan;

  CsvTable tab({"rho", "d", "L", "h", "value", "closed_form", "rel_error", "iterations",
                "grad_norm", "converged"});
  tab.add_row({format_f64(c.rho), format_i64(c.d), format_f64(grid.L), format_f64(grid.h),
               format_f64(r.value), format_f64(closed), format_f64(rel),
               format_i64(r.iterations), format_f64(r.grad_norm), fmt_bool(r.converged)});
  sink.csv("chi.csv", tab);

  CsvTable tr({"iteration", "value", "grad_norm"});
  for (const TraceRow& row : trace)
    tr.add_row({format_i64(row.iteration), format_f64(row.value), format_f64(row.grad_norm)});
  sink.csv("trace.csv", tr);
  sink.json("trace.plot.json",
            plot_spec("trace.csv", axis("iteration", false),
                      {axis("value", false), axis("grad_norm", true)}));
  export_grid(r.minimizer, sink.claim_stem("minimizer"));

  // Log-Sobolev spot check: random unit fields must stay above the
  // discretization-adjusted floor.
  const double floor = closed - chi_slack(c.rho, c.d, grid.h, grid.L);
  CsvTable sob({"index", "J", "floor", "margin"});
  Rng rng(c.seed, 0x5b0'0001);
  for (int trial = 0; trial < 100; ++trial) {
    GridFunction g = grid;
    if (trial < 70) {
      std::array<double, kMaxDim> s{};
      for (int a = 0; a < c.d; ++a) s[a] = -0.25 * c.L + 0.5 * c.L * rng.uniform();
      double amp = 0.5 * rng.uniform();
      double w = 0.5 + 2.5 * rng.uniform();
      double phase = 2.0 * std::numbers::pi * rng.uniform();
      g.fill([&](const std::array<double, kMaxDim>& x) {
        double q = 0.0;
        for (int a = 0; a < c.d; ++a) q += (x[a] - s[a]) * (x[a] - s[a]);
        return std::exp(-0.5 * q) * (1.0 + amp * std::sin(w * x[0] + phase));
      });
    } else {
      for (long long i = 0; i < g.node_count(); ++i) g.values[i] = rng.uniform();
    }
    unit_mass_normalize(g);
    double J = functional_J(g, c.rho);
    sob.add_row({format_i64(trial), format_f64(J), format_f64(floor),
                 format_f64(J - floor)});
  }
  sink.csv("sobolev.csv", sob);

  if (c.eps > 0.0) {
    ChiOptions copts = opts;
    copts.trace = nullptr;
    GridFunction cgrid = GridFunction::make(c.d, 3.0 * c.R, c.h);
    ConstrainedChiResult cr = minimize_chi_constrained(c.rho, c.d, c.eps, c.R, cgrid, copts);
    CsvTable con({"start", "value", "violation"});
    for (std::size_t k = 0; k < cr.start_values.size(); ++k)
      con.add_row({format_i64(static_cast<long>(k)), format_f64(cr.start_values[k]),
                   format_f64(cr.start_violations[k])});
    con.add_row({"best", format_f64(cr.best.value), format_f64(cr.best.feasibility_residual)});
    sink.csv("constrained.csv", con);
  }
}

void run_ldp(const RunConfig& c, Sink& sink) {
  GridFunction f = GridFunction::make(c.d, c.R, c.h);
  if (c.f_values.empty()) {
    f.values.setOnes();
  } else {
    if (static_cast<long long>(c.f_values.size()) != f.node_count())
      bad_config("f_values needs " + std::to_string(f.node_count()) + " node values for this grid");
    for (long long i = 0; i < f.node_count(); ++i) {
      if (c.f_values[i] < 0.0) bad_config("f_values must be nonnegative");
      f.values[i] = c.f_values[i];
    }
  }
  export_grid(f, sink.claim_stem("f"));

  ScaleTable table(c.dist);
  CsvTable tab({"t", "finite_t", "limit"});
  for (double t : c.t_grid) {
    RateCheck rc = cumulant_rate_check(table, f, c.rho, t, c.subdiv);
    tab.add_row({format_f64(t), format_f64(rc.finite_t), format_f64(rc.limit)});
  }
  sink.csv("ldp.csv", tab);
  sink.json("ldp.plot.json",
            plot_spec("ldp.csv", axis("t", true),
                      {axis("finite_t", false), axis("limit", false)}));
}

void run_confine(const RunConfig& c, Sink& sink) {
  ConfinementOptions o;
  o.t_grid = c.t_grid;
  o.eps_grid = c.eps_grid;
  o.R = c.R;
  o.M = c.truncation;
  o.rho = c.rho;
  o.d = c.d;
  o.replicas = c.replicas;
  o.tilted = c.tilted;
  o.seed = c.seed;
  o.shift_spacing = c.shift_spacing;
  o.window_h = c.window_h;
  o.keep_replicas = c.keep_replicas;
  ScaleTable table(c.dist);
  ConfinementReport rep = confinement_experiment(table, o);

  nlohmann::json report{{"t_grid", rep.t_grid}, {"eps_grid", rep.eps_grid},
                        {"R", rep.R},           {"M", rep.M},
                        {"rho", rep.rho},       {"d", rep.d},
                        {"replicas", rep.replicas}, {"tilted", rep.tilted},
                        {"seed", rep.seed},     {"tail", rep.tail},
                        {"ess", rep.ess}};
  std::vector<int> low(rep.ess_low.begin(), rep.ess_low.end());
  report["ess_low"] = low;
  sink.json("confine.json", report);

  CsvTable tails({"t", "eps", "G"});
  for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti)
    for (std::size_t ei = 0; ei < rep.eps_grid.size(); ++ei)
      tails.add_row({format_f64(rep.t_grid[ti]), format_f64(rep.eps_grid[ei]),
                     format_f64(rep.tail[ti][ei])});
  sink.csv("tails.csv", tails);
  sink.json("tails.plot.json",
            plot_spec("tails.csv", axis("eps", false), {axis("G", false)}, "t"));

  CsvTable ess({"t", "ess", "ess_low"});
  for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti)
    ess.add_row({format_f64(rep.t_grid[ti]), format_f64(rep.ess[ti]),
                 format_i64(rep.ess_low[ti])});
  sink.csv("ess.csv", ess);

  if (c.keep_replicas) {
    CsvTable rows({"t", "replica", "log_weight", "distance", "argmin_shift"});
    for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti)
      for (long i = 0; i < rep.replicas; ++i) {
        std::string shift = format_f64(rep.argmin_shifts[ti][i][0]);
        for (int a = 1; a < rep.d; ++a)
          shift += ";" + format_f64(rep.argmin_shifts[ti][i][a]);
        rows.add_row({format_f64(rep.t_grid[ti]), format_i64(i),
                      format_f64(rep.log_weights[ti][i]), format_f64(rep.distances[ti][i]),
                      shift});
      }
    sink.csv("replicas.csv", rows);
  }
}

void run_moments(const RunConfig& c, Sink& sink) {
  ScaleTable table(c.dist);
  const double peak =
      c.rho + c.rho * (0.5 * c.d) * std::log(c.rho / std::numbers::pi);
  const double M = c.truncation > 0.0 ? c.truncation : peak + 1.0;
  const double bound = c.K * std::log(c.K / c.rho);

  CsvTable an({"t", "K", "M", "rate", "se", "ess", "low_ess", "bound"});
  for (double t : c.t_grid) {
    MomentEstimate me = annealed_F_moment(table, c.d, t, c.R, c.rho, c.K, M, c.replicas, c.seed);
    an.add_row({format_f64(t), format_f64(c.K), format_f64(M), format_f64(me.rate),
                format_f64(me.se), format_f64(me.ess), fmt_bool(me.low_ess),
                format_f64(bound)});
  }
  sink.csv("annealed.csv", an);
  sink.json("annealed.plot.json",
            plot_spec("annealed.csv", axis("t", true),
                      {axis("rate", false), axis("bound", false)}));

  CsvTable inter({"t", "p", "q", "radius", "replicas", "ratio"});
  inter.add_row({format_f64(c.t), format_f64(c.p), format_f64(c.q), format_i64(c.radius),
                 format_i64(c.replicas),
                 format_f64(intermittency_ratio(c.dist, c.d, c.radius, c.p, c.q, c.t,
                                                c.replicas, c.seed))});
  sink.csv("intermittency.csv", inter);
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"scale", "eigen",   "evolve",  "fk",
                                                 "chi",   "ldp",     "confine", "moments"};
  return names;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) bad_config("config must be a JSON object");
  RunConfig c;
  std::string family;
  double rho0 = 0.0, value = 0.0, lo = 0.0, hi = 0.0, p_lo = 0.0;
  bool has_family = false, has_rho0 = false, has_value = false, has_lo = false, has_hi = false,
       has_p_lo = false;

  for (const auto& [key, v] : j.items()) {
    if (key == "subcommand") c.subcommand = as_str(v, key);
    else if (key == "family") { family = as_str(v, key); has_family = true; }
    else if (key == "rho0") { rho0 = as_f64(v, key); has_rho0 = true; }
    else if (key == "value") { value = as_f64(v, key); has_value = true; }
    else if (key == "lo") { lo = as_f64(v, key); has_lo = true; }
    else if (key == "hi") { hi = as_f64(v, key); has_hi = true; }
    else if (key == "p_lo") { p_lo = as_f64(v, key); has_p_lo = true; }
    else if (key == "d") c.d = static_cast<int>(as_long(v, key));
    else if (key == "rho") c.rho = as_f64(v, key);
    else if (key == "L") c.L = as_f64(v, key);
    else if (key == "h") c.h = as_f64(v, key);
    else if (key == "R") c.R = as_f64(v, key);
    else if (key == "radius") c.radius = as_long(v, key);
    else if (key == "t") c.t = as_f64(v, key);
    else if (key == "t_grid") c.t_grid = as_f64_vec(v, key);
    else if (key == "replicas") c.replicas = as_long(v, key);
    else if (key == "seed") {
      if (!v.is_number_integer() && !v.is_number_unsigned())
        bad_config("'seed' must be an integer");
      c.seed = v.get<std::uint64_t>();
    }
    else if (key == "threads") c.threads = static_cast<int>(as_long(v, key));
    else if (key == "out") c.out = as_str(v, key);
    else if (key == "eps_grid") c.eps_grid = as_f64_vec(v, key);
    else if (key == "eps") c.eps = as_f64(v, key);
    else if (key == "tilted") c.tilted = as_bool(v, key);
    else if (key == "keep_replicas") c.keep_replicas = as_bool(v, key);
    else if (key == "truncation") c.truncation = as_f64(v, key);
    else if (key == "shift_spacing") c.shift_spacing = as_f64(v, key);
    else if (key == "window_h") c.window_h = as_f64(v, key);
    else if (key == "K") c.K = as_f64(v, key);
    else if (key == "p") c.p = as_f64(v, key);
    else if (key == "q") c.q = as_f64(v, key);
    else if (key == "y") c.y = as_f64(v, key);
    else if (key == "tol") c.tol = as_f64(v, key);
    else if (key == "f_values") c.f_values = as_f64_vec(v, key);
    else if (key == "subdiv") c.subdiv = static_cast<int>(as_long(v, key));
    else bad_config("unknown key '" + key + "'");
  }

  if (c.subcommand.empty()) bad_config("missing 'subcommand'");
  if (c.d < 1 || c.d > kMaxDim) bad_config("d must be in [1, " + std::to_string(kMaxDim) + "]");
  if (!(c.rho > 0)) bad_config("rho must be positive");
  if (!(c.L > 0) || !(c.h > 0) || c.h > c.L) bad_config("need 0 < h <= L");
  if (c.R < 0) bad_config("R must be nonnegative");
  if (c.radius < 0) bad_config("radius must be nonnegative");
  if (c.t < 0) bad_config("t must be nonnegative");
  for (double t : c.t_grid)
    if (!(t > 0)) bad_config("t_grid entries must be positive");
  if (c.replicas < 0) bad_config("replicas must be nonnegative");
  if (c.threads < 1) bad_config("threads must be at least 1");
  if (c.eps < 0) bad_config("eps must be nonnegative");
  for (double e : c.eps_grid)
    if (e < 0) bad_config("eps_grid entries must be nonnegative");
  if (c.truncation < 0) bad_config("truncation must be nonnegative");
  if (c.shift_spacing < 0 || c.window_h < 0)
    bad_config("shift_spacing and window_h must be nonnegative");
  if (!(c.K > 0)) bad_config("K must be positive");
  if (!(c.p > 0) || !(c.q >= c.p)) bad_config("need 0 < p <= q");
  if (!(c.y > 0)) bad_config("y must be positive");
  if (!(c.tol > 0)) bad_config("tol must be positive");
  if (c.subdiv < 1) bad_config("subdiv must be at least 1");

  try {
    if (!has_family) {
      if (has_rho0 || has_value || has_lo || has_hi || has_p_lo)
        bad_config("distribution parameters require 'family'");
      c.dist = PotentialDistribution::triple_exp(c.rho);
    } else if (family == "triple_exp") {
      if (has_value || has_lo || has_hi || has_p_lo)
        bad_config("family triple_exp takes only 'rho0'");
      c.dist = PotentialDistribution::triple_exp(has_rho0 ? rho0 : c.rho);
    } else if (family == "constant") {
      if (has_rho0 || has_lo || has_hi || has_p_lo)
        bad_config("family constant takes only 'value'");
      c.dist = PotentialDistribution::constant(has_value ? value : 0.0);
    } else if (family == "two_point") {
      if (has_rho0 || has_value) bad_config("family two_point takes 'lo', 'hi', 'p_lo'");
      if (!has_lo || !has_hi || !has_p_lo) bad_config("family two_point needs 'lo', 'hi', 'p_lo'");
      c.dist = PotentialDistribution::two_point(lo, hi, p_lo);
    } else {
      bad_config("unknown family '" + family + "'");
    }
  } catch (const std::invalid_argument& e) {
    bad_config(e.what());
  }

  finalize(c);
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j{{"subcommand", c.subcommand},
                   {"d", c.d},
                   {"rho", c.rho},
                   {"L", c.L},
                   {"h", c.h},
                   {"R", c.R},
                   {"radius", c.radius},
                   {"t", c.t},
                   {"t_grid", c.t_grid},
                   {"replicas", c.replicas},
                   {"seed", c.seed},
                   {"eps", c.eps},
                   {"eps_grid", c.eps_grid},
                   {"tilted", c.tilted},
                   {"keep_replicas", c.keep_replicas},
                   {"truncation", c.truncation},
                   {"shift_spacing", c.shift_spacing},
                   {"window_h", c.window_h},
                   {"K", c.K},
                   {"p", c.p},
                   {"q", c.q},
                   {"y", c.y},
                   {"tol", c.tol},
                   {"f_values", c.f_values},
                   {"subdiv", c.subdiv}};
  switch (c.dist.family) {
    case Family::triple_exp:
      j["family"] = "triple_exp";
      j["rho0"] = c.dist.rho0;
      break;
    case Family::constant:
      j["family"] = "constant";
      j["value"] = c.dist.value;
      break;
    case Family::two_point:
      j["family"] = "two_point";
      j["lo"] = c.dist.lo;
      j["hi"] = c.dist.hi;
      j["p_lo"] = c.dist.p_lo;
      break;
  }
  return j;
}

std::vector<fs::path> run_subcommand(const RunConfig& c) {
  Sink sink(c.out);
  try {
    if (c.subcommand == "scale") run_scale(c, sink);
    else if (c.subcommand == "eigen") run_eigen(c, sink);
    else if (c.subcommand == "evolve") run_evolve(c, sink);
    else if (c.subcommand == "fk") run_fk(c, sink);
    else if (c.subcommand == "chi") run_chi(c, sink);
    else if (c.subcommand == "ldp") run_ldp(c, sink);
    else if (c.subcommand == "confine") run_confine(c, sink);
    else if (c.subcommand == "moments") run_moments(c, sink);
    else bad_config("unknown subcommand '" + c.subcommand + "'");

    nlohmann::json manifest = make_manifest(config_to_json(c));
    manifest["artifacts"] = sink.names();
    sink.json("manifest.json", manifest);
  } catch (...) {
    sink.discard();
    throw;
  }
  return sink.take();
}

namespace {

int check_line(const std::string& sub, const char* name, bool ok, const std::string& detail) {
  std::string line = "check " + sub + "/" + name + ": " + (ok ? "ok" : "FAIL");
  if (!detail.empty()) line += " (" + detail + ")";
  line += "\n";
  std::fputs(line.c_str(), stdout);
  return ok ? 0 : 1;
}

}  // namespace

int run_check(const std::string& sub) {
  int fails = 0;
  auto chk = [&](const char* name, bool ok, const std::string& detail = "") {
    fails += check_line(sub, name, ok, detail);
  };

  if (sub == "scale") {
    ScaleTable tb(PotentialDistribution::constant(1.0));
    chk("constant cgf", std::abs(tb.h(3.0) - 3.0) <= 1e-9);
    chk("constant kappa", std::abs(kappa(tb, 5.0) - 1.0) <= 1e-8);
    chk("constant alpha", std::abs(alpha_scale(tb, 8.0, 1) - 2.0) <= 1e-6);
  } else if (sub == "eigen") {
    BoxSpec box = BoxSpec::lattice_box(1, 5);
    Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(box.site_count());
    EigenResult r = principal_eigen_discrete(box, zero, 1e-12);
    double exact = -2.0 * (1.0 - std::cos(std::numbers::pi / 12.0));
    chk("dirichlet path eigenvalue", std::abs(r.value - exact) <= 1e-10);
    PotentialField f = sample_field(PotentialDistribution::two_point(-1.0, 2.0, 0.4),
                                    BoxSpec::lattice_box(1, 6), 1);
    LatticeOperator op{Rect::cube(f.box), f.values, 1.0};
    double diff =
        std::abs(principal_eigen_lanczos(op, 1e-12).value - principal_eigen_dense(op).value);
    chk("lanczos matches dense", diff <= 1e-10);
  } else if (sub == "evolve") {
    PotentialField f =
        sample_field(PotentialDistribution::constant(1.0), BoxSpec::lattice_box(1, 0), 1);
    SolutionState st = evolve(f, 0.5);
    chk("single site closed form", std::abs(total_mass(st) - std::exp(-0.5)) <= 1e-7);
  } else if (sub == "fk") {
    PotentialField f =
        sample_field(PotentialDistribution::constant(1.0), BoxSpec::lattice_box(1, 8), 1);
    MeanStderr ms = fk_estimate(f, 0.5, 200, 1);
    chk("constant potential mean", std::abs(ms.mean - std::exp(0.5)) <= 1e-9 &&
                                       ms.stderr_ <= 1e-9);
  } else if (sub == "chi") {
    double cf = chi_closed_form(1.0, 1);
    chk("closed form", std::abs(cf - (1.0 + 0.5 * std::log(std::numbers::pi))) <= 1e-12);
    GridFunction grid = GridFunction::make(1, 6.0, 0.1);
    VariationalResult r = minimize_chi(1.0, 1, grid, {});
    chk("small grid minimum", std::abs(r.value - cf) <= 0.05 * cf);
  } else if (sub == "ldp") {
    ScaleTable tb(PotentialDistribution::triple_exp(1.0));
    GridFunction f = GridFunction::make(1, 2.0, 0.25);
    f.values.setOnes();
    RateCheck rc = cumulant_rate_check(tb, f, 1.0, 1e3);
    chk("flat profile limit", rc.limit == 0.0);
    chk("flat profile finite t", std::abs(rc.finite_t) < 0.25);
  } else if (sub == "confine") {
    ConfinementOptions o;
    o.t_grid = {8.0};
    o.eps_grid = {0.5, 0.7};
    o.R = 1.0;  // zero-profile distance to the parabola is 0.5998 at this window
    o.rho = 1.0;
    o.d = 1;
    o.replicas = 4;
    o.tilted = false;
    o.seed = 5;
    ScaleTable tb(PotentialDistribution::constant(1.0));
    ConfinementReport rep = confinement_experiment(tb, o);
    chk("constant family ess", rep.ess[0] == 4.0);
    chk("constant family tail", rep.tail[0][0] == 1.0 && rep.tail[0][1] == 0.0);
  } else if (sub == "moments") {
    MomentIdentity mi = multinomial_identity({0.0, 1.0}, {0.5, 0.5}, 3, 0.3, 3);
    chk("multinomial regrouping",
        std::abs(mi.enumerated - mi.regrouped) <= 1e-12 * std::max(1.0, mi.enumerated));
    double ratio =
        intermittency_ratio(PotentialDistribution::constant(1.0), 1, 1, 1.0, 2.0, 1.0, 3, 1);
    chk("degenerate ratio", ratio == 1.0);
  } else {
    chk("subcommand", false, "unknown subcommand '" + sub + "'");
  }
  return fails;
}

}  // namespace pam
