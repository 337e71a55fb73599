#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "pam/io.hpp"
#include "pam/runner.hpp"

namespace {

const char* describe(const std::string& name) {
  if (name == "scale") return "H, kappa and alpha tables plus the H(yt) trend";
  if (name == "eigen") return "principal eigenvalues, discrete and rescaled";
  if (name == "evolve") return "heat-equation snapshots and mass growth";
  if (name == "fk") return "path-integral Monte Carlo of the total mass";
  if (name == "chi") return "variational constant, minimizer and log-Sobolev suite";
  if (name == "ldp") return "tilted-cumulant rate tables";
  if (name == "confine") return "mass-weighted shape confinement experiment";
  return "annealed growth moments and intermittency ratios";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for the parabolic Anderson model"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool check = false;
  for (const std::string& name : pam::subcommand_names()) {
    CLI::App* s = app.add_subcommand(name, describe(name));
    s->add_option("--config", config_path, "JSON config file");
    s->add_option("--seed", seed, "override the config seed");
    s->add_option("--threads", threads, "worker pool cap (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    s->add_option("--out", out_dir, "output directory");
    s->add_flag("--check", check, "run the built-in oracle fixtures and exit");
  }
  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (check) return pam::run_check(name) == 0 ? 0 : 1;

    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) j = pam::read_json(config_path);
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
    if (j.contains("subcommand")) {
      std::string cfg = j["subcommand"].is_string() ? j["subcommand"].get<std::string>() : "";
      if (cfg != name)
        throw std::runtime_error("config names subcommand '" + cfg + "', invoked '" + name + "'");
    } else {
      j["subcommand"] = name;
    }
    if (sub->count("--seed")) j["seed"] = seed;
    if (sub->count("--threads")) j["threads"] = threads;
    if (sub->count("--out")) j["out"] = out_dir;
    else if (const char* env = std::getenv("PAMLAB_OUT")) j["out"] = env;

    pam::RunConfig c = pam::config_from_json(j);
    for (const auto& p : pam::run_subcommand(c)) std::printf("wrote %s\n", p.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pamlab %s: error: %s\n", name.c_str(), e.what());
    return 1;
  }
}
