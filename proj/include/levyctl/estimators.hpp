#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/path_engine.hpp"

namespace levyctl {

/// Monte Carlo mean with its standard error.
struct EstimateWithError {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::string fingerprint;
  /// Sample excess-free kurtosis (m4 / m2^2); heavy tails make stderr unreliable.
  double kurtosis = 0.0;
  bool stderr_reliable = true;
};

/// Kurtosis above which stderr is flagged unreliable.
inline constexpr double kKurtosisLimit = 100.0;

/*!
 * Per-path samples, row-major: one row per path, one column per functional.
 * Filled in path order so reductions are independent of the worker count.
 */
class SampleMatrix {
 public:
  SampleMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<double> column(std::size_t c) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/*!
 * Mean and standard error of per-path samples. With antithetic pairs the
 * standard error is computed from pair averages.
 */
EstimateWithError summarize(std::span<const double> samples, bool antithetic_pairs = false);

/// Summary of sum_c weights[c] * column c, computed pathwise.
EstimateWithError summarize_combination(const SampleMatrix& samples,
                                        std::span<const std::pair<std::size_t, double>> weights,
                                        double constant = 0.0, bool antithetic_pairs = false);

/// 64-bit FNV-1a of the canonical description, as 16 hex digits.
std::string fingerprint_of(const std::string& canonical);

/*!
 * Simulates every path of `gen` and lets fn(path, x0, row) write that path's
 * functionals into `row`. x0 is the path started at 0 on the full grid.
 * Deterministic models simulate path 0 once and replicate its row.
 */
template <class Fn>
void for_each_path(const PathGenerator& gen, SampleMatrix& out, Fn&& fn);

enum class RhoMethod { time_integral, exp_clock };

struct ValueEstimate {
  EstimateWithError v1;  // running cost part
  EstimateWithError v2;  // control part
  EstimateWithError v;   // v1 + C v2, pathwise
};

/// rho(b) = E[int e^{-qt} f'_+(U^0_t + b) dt] by either representation.
EstimateWithError estimate_rho(const LevyTriplet& triplet, const ProblemSpec& problem, double b,
                               const SimConfig& cfg, RhoMethod method);

/// v_b(x) and its two components; reuses `crn_batch` paths when given.
ValueEstimate estimate_value(const LevyTriplet& triplet, const ProblemSpec& problem, double b,
                             double x, const SimConfig& cfg,
                             const PathBatch* crn_batch = nullptr);

/// rho-hat on a strictly increasing grid of barriers, all from one batch.
std::vector<std::pair<double, EstimateWithError>> estimate_rho_curve(
    const LevyTriplet& triplet, const ProblemSpec& problem, std::span<const double> b_grid,
    const SimConfig& cfg);

/// rho(b) from paths started at b and reflected at b (no argument shift).
EstimateWithError estimate_rho_started_at_barrier(const LevyTriplet& triplet,
                                                  const ProblemSpec& problem, double b,
                                                  const SimConfig& cfg);

}  // namespace levyctl

#include "levyctl/detail/for_each_path.hpp"
