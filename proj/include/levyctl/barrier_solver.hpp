#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levyctl/cost_model.hpp"
#include "levyctl/estimators.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/path_engine.hpp"

namespace levyctl {

/*!
 * Discounted occupation measure of the reflected-at-0 process U^0 over one
 * fixed batch of paths, binned by level.
 *
 * Each bin keeps its total weight and the weighted sum of levels, so
 * rho(b) = sum_k W_k f'_+(M_k / W_k + b) is exact whenever f'_+ is affine
 * inside a bin. Every evaluation reuses the same paths, so the estimate is
 * exactly nondecreasing in b.
 */
class OccupationMeasure {
 public:
  explicit OccupationMeasure(double bin_width) : width_(bin_width), inv_width_(1.0 / bin_width) {}

  void add(double level, double weight);
  void merge(const OccupationMeasure& other);

  /// sum_k W_k f'_+(center_k + b).
  double integrate_derivative(const CostSpec& cost, double b) const;
  /// sum of weights (discount mass) and of weight * level.
  double mass() const;
  double first_moment() const;
  double bin_width() const { return width_; }
  std::size_t bins() const { return bins_.size(); }

 private:
  struct Bin {
    double weight = 0.0;
    double moment = 0.0;
  };
  double width_;
  double inv_width_;
  std::vector<Bin> bins_;
};

/// Builds the occupation measure of U^0 for `cfg.n_paths` paths (weights 1/n).
OccupationMeasure build_occupation_measure(const LevyTriplet& triplet, double q,
                                           const SimConfig& cfg, double bin_width,
                                           std::size_t chunk_paths = 1024);

struct SolverSettings {
  double bisect_tol = 0.0;  // <= 0: 1e-3 (1 + |b|) at the current midpoint
  double occupation_bin = 1e-4;
  std::size_t chunk_paths = 1024;
  double expansion_limit = 1e6;
};

struct BarrierResult {
  double b_star = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  EstimateWithError rho_at_b_star;
  int iterations = 0;
  double ci_halfwidth = 0.0;
  /// Secant slope of rho-hat over [b* - delta, b* + delta].
  double slope = 0.0;
  /// Slope below 1e-12: b* may sit on a flat stretch of f'_+, ci is infinite.
  bool flat_slope = false;
  double bisect_tol = 0.0;
  /// E-hat[int e^{-qt} U^0_t dt] and sum_i e^{-q t_i} dt on the solver batch.
  double occupation_mean = 0.0;
  double discount_mass = 0.0;
  std::string fingerprint;
};

/*!
 * b* = inf{b : rho(b) + C >= 0} by geometric bracketing from 0 and bisection
 * on rho-hat of one fixed batch. Throws AssumptionViolated when the problem is
 * not admissible or the model is a driftless compound Poisson process, and
 * NoSignChange when the bracket leaves [-limit, limit].
 */
BarrierResult solve_barrier(const LevyTriplet& triplet, const ProblemSpec& problem,
                            const SimConfig& cfg, const SolverSettings& settings = {});

struct PerturbedResult {
  std::vector<std::pair<double, BarrierResult>> sequence;  // (eps, result) in grid order
  double b_star = 0.0;                                      // result at the smallest eps
  /// b*_[-eps] nonincreasing as eps decreases, up to 3 combined ci per pair.
  bool monotone = true;
};

/// Driftless compound Poisson models: solves for X_t - eps t on a decreasing eps grid.
PerturbedResult solve_barrier_perturbed(const LevyTriplet& triplet, const ProblemSpec& problem,
                                        const SimConfig& cfg,
                                        std::vector<double> eps_grid = {0.2, 0.1, 0.05, 0.025},
                                        const SolverSettings& settings = {});

/// v-hat_b(x) for every b of a sorted grid on shared paths, with per-path samples.
struct BarrierSweep {
  std::vector<double> b_grid;
  std::vector<EstimateWithError> values;
  SampleMatrix samples;  // per-path v_b(x), one column per barrier
  bool antithetic = false;

  /// v-hat at column j minus column i, with the pathwise standard error.
  EstimateWithError difference(std::size_t i, std::size_t j) const;
  std::size_t argmin() const;
};

BarrierSweep barrier_sweep(const LevyTriplet& triplet, const ProblemSpec& problem, double x,
                           std::span<const double> b_grid, const SimConfig& cfg);

}  // namespace levyctl
