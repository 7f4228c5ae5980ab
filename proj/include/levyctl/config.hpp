#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/path_engine.hpp"

namespace levyctl {

// Run configuration read from a JSON file. Every block rejects unknown keys
// and reports errors as ConfigError with the dotted path of the field.
//
// Defaults: sim.dt = 0.01, sim.n_paths = 10000, sim.seed = 20240101,
// sim.antithetic = false, sim.horizon = log(1e4) / q (exp(-qT) = 1e-4),
// model.gamma = model.sigma = 0, model.theta_bar = 1, no jumps.

struct SolveBlock {
  double bisect_tol = 0.0;  // 0: relative default 1e-3 (1 + |b|)
  double occupation_bin = 1e-4;
};

struct SweepBlock {
  double x = 0.0;
  std::vector<double> b_grid;
};

struct ValueBlock {
  double x = 0.0;
  double b = 0.0;
};

struct RhoBlock {
  std::vector<double> b_grid;
  std::string method = "time_integral";  // or "exp_clock"
};

struct VerifyBlock {
  std::vector<std::string> checks{"barrier_derivative", "slope_identity", "convexity",
                                  "martingale", "hjb"};
  std::optional<double> b;                    // barrier; b* from the solver when absent
  std::optional<double> x;                    // default b + 0.5
  std::optional<std::vector<double>> x_grid;  // default 15 points b - 1.375 + 0.25 k
  std::vector<double> t_grid{0.0, 0.5, 1.0, 2.0, 4.0};
  double h = 0.05;
  double fd_h = 0.05;
};

struct PerturbBlock {
  std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
};

struct RunConfig {
  LevyTriplet model;
  ProblemSpec problem;
  SimConfig sim;
  SolveBlock solve;
  SweepBlock sweep;
  ValueBlock value;
  RhoBlock rho;
  VerifyBlock verify;
  PerturbBlock perturb;
  /// The parsed document after overrides, echoed into result.json.
  nlohmann::json source;
};

/// Reads and parses a JSON file; ConfigError with path "<file>" on failure.
nlohmann::json load_json_file(const std::string& path);

/*!
 * Applies "a.b.c=value" to the document. The value is parsed as JSON when
 * possible (numbers, booleans, arrays) and kept as a string otherwise.
 */
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Validates the document and builds the run configuration.
RunConfig parse_run_config(const nlohmann::json& doc);

/// Builds the model, the cost or the problem from their blocks alone.
LevyTriplet parse_model(const nlohmann::json& block, const std::string& path = "model");
CostSpec parse_cost(const nlohmann::json& block, const std::string& path = "problem.cost");

}  // namespace levyctl
