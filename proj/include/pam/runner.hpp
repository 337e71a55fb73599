#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pam/distribution.hpp"

namespace pam {

// Batch-run configuration, one flat JSON object. Every field has a default so
// a config may name only what it changes; the effective config (defaults
// resolved, overrides applied) is what the manifest records, and re-running
// from that manifest reproduces all outputs byte for byte.
struct RunConfig {
  std::string subcommand;
  PotentialDistribution dist = PotentialDistribution::triple_exp(1.0);
  int d = 1;
  double rho = 1.0;
  double L = 8.0;   // variational grid half-width
  double h = 0.05;  // grid spacing (variational, ldp node grid)
  double R = 0.0;   // continuum window radius; 0 = subcommand default
  long radius = 8;  // lattice box radius
  double t = 0.0;   // single-time subcommands; 0 = subcommand default
  std::vector<double> t_grid;
  long replicas = 0;  // 0 = subcommand default
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "pam_out";
  // Subcommand extras.
  std::vector<double> eps_grid;    // confine tail thresholds
  double eps = 0.0;                // chi: shape-constraint level
  bool tilted = true;              // confine
  bool keep_replicas = false;      // confine: per-replica CSV
  double truncation = 0.0;         // confine/moments M override; 0 = default
  double shift_spacing = 0.0;      // confine; 0 = R/8
  double window_h = 0.0;           // confine; 0 = R/40
  double K = 1.0;                  // moments: annealed moment order
  double p = 1.0;                  // moments: intermittency orders
  double q = 2.0;
  double y = 2.0;                  // scale: hk_ratio argument
  double tol = 1e-10;              // eigen solve / propagator tolerance
  std::vector<double> f_values;    // ldp: node values of f; empty = f == 1
  int subdiv = 8;                  // ldp cell quadrature points per axis
};

// Strict parse: unknown keys, malformed values, or an inconsistent
// distribution block throw std::runtime_error naming the offending key.
// Defaults that depend on the subcommand (t, t_grid, replicas, eps_grid) are
// resolved here, so the result equals what the run will actually use.
RunConfig config_from_json(const nlohmann::json& j);

// Flat canonical form of the effective config. Excludes the output directory
// and thread count: neither may influence numerical results, so neither
// belongs in the hashed identity of a run.
nlohmann::json config_to_json(const RunConfig& c);

// Executes c.subcommand, writing CSV/JSON/binary artifacts plus manifest.json
// under c.out. Returns the artifact paths. On any error the partially written
// files are removed before the exception escapes.
std::vector<std::filesystem::path> run_subcommand(const RunConfig& c);

// Fast built-in oracle fixtures for one subcommand; prints one line per
// fixture and returns the number of failures.
int run_check(const std::string& subcommand);

const std::vector<std::string>& subcommand_names();

}  // namespace pam
