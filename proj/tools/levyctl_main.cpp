// Command-line front end: levyctl <command> --config FILE [--out DIR] [--set k=v ...]

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "levyctl/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo barrier solver for singular control of Levy processes"};
  app.require_subcommand(1);

  levyctl::RunRequest req;
  std::vector<std::string> sets;
  std::string seed;
  std::string paths;
  std::string dt;
  std::string horizon;

  const std::pair<const char*, const char*> commands[] = {
      {"solve", "optimal barrier b* by bisection on rho + C"},
      {"value", "value of the barrier strategy at (value.x, value.b)"},
      {"rho", "rho(b) on rho.b_grid"},
      {"sweep", "barrier strategy values over sweep.b_grid"},
      {"verify", "numerical checks of the solution"},
      {"perturb", "driftless compound Poisson: solve with drift -eps"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", req.config_path, "JSON run configuration")->required();
    sub->add_option("--out", req.out_dir, "output directory");
    sub->add_option("--set", sets, "override key=value (repeatable)");
    sub->add_option("--seed", seed, "sim.seed override");
    sub->add_option("--paths", paths, "sim.n_paths override");
    sub->add_option("--dt", dt, "sim.dt override");
    sub->add_option("--horizon", horizon, "sim.horizon override");
    sub->add_option("--workers", req.workers, "worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  req.command = app.get_subcommands().front()->get_name();
  req.overrides = sets;
  if (!seed.empty()) req.overrides.push_back("sim.seed=" + seed);
  if (!paths.empty()) req.overrides.push_back("sim.n_paths=" + paths);
  if (!dt.empty()) req.overrides.push_back("sim.dt=" + dt);
  if (!horizon.empty()) req.overrides.push_back("sim.horizon=" + horizon);
  return levyctl::run(req, std::cout, std::cerr);
}
