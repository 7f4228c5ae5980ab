#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/rng.hpp"

namespace levyctl {

/// Discretization and sampling settings shared by every estimator.
struct SimConfig {
  double dt = 1e-2;
  double horizon = 20.0;
  std::uint64_t n_paths = 10000;
  std::uint64_t master_seed = 20240101;
  bool antithetic = false;
  unsigned workers = 0;  // 0 = all hardware threads; never affects results

  /// Number of grid steps; the grid is 0, dt, ..., steps()*dt >= horizon.
  std::size_t steps() const;
  /// Throws InvalidModel when dt, horizon or n_paths are unusable.
  void validate() const;
  /// Also requires exp(-q horizon) <= tail_tol.
  void validate_for(const ProblemSpec& problem, double tail_tol = 1e-4) const;
  /// Canonical description used in fingerprints (excludes `workers`).
  std::string describe() const;
};

/// Smallest horizon T with exp(-q T) <= tail_tol.
double horizon_for(double q, double tail_tol = 1e-4);

struct JumpMark {
  std::size_t grid_index;
  double size;
};

class PathGenerator;

/*!
 * Sequential view of one simulated path X^0 (started at 0).
 *
 * Each call to next() advances one grid step and returns X^0 at the new grid
 * point. Gaussian increments are d dt + sigma sqrt(dt) Z; jumps arriving in
 * (t_i, t_{i+1}] are added at t_{i+1}.
 */
class PathStream {
 public:
  PathStream(const PathGenerator& gen, std::uint64_t path);

  double next(std::vector<JumpMark>* marks = nullptr);
  /// Advances out.size() steps and writes the new values in order.
  void fill(std::span<double> out);
  double value() const { return x_; }
  std::size_t index() const { return i_; }

 private:
  const PathGenerator* gen_;
  StreamRng rng_;
  bool mirror_;
  double x_ = 0.0;
  std::size_t i_ = 0;
  double next_jump_ = 0.0;
};

class PathGenerator {
 public:
  /// Throws InvalidModel for the zero process and for invalid configs.
  PathGenerator(LevyTriplet triplet, SimConfig cfg);

  const LevyTriplet& triplet() const { return triplet_; }
  const SimConfig& config() const { return cfg_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return cfg_.dt; }
  bool deterministic() const { return triplet_.is_deterministic(); }
  bool antithetic_active() const { return antithetic_; }
  /// Non-fatal notes, e.g. antithetic sampling disabled for asymmetric jumps.
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Stream key identifying the random numbers used by `path`.
  std::uint64_t stream_id(std::uint64_t path) const;

  PathStream stream(std::uint64_t path) const { return PathStream(*this, path); }

  /// Writes X^0 at every grid point (steps()+1 values, first is 0).
  void generate(std::uint64_t path, std::span<double> out,
                std::vector<JumpMark>* marks = nullptr) const;

 private:
  friend class PathStream;

  LevyTriplet triplet_;
  SimConfig cfg_;
  std::size_t steps_;
  bool antithetic_;
  double drift_step_;
  double diffusion_step_;
  std::vector<std::string> warnings_;
};

/// Materialized batch of paths; values are absolute (X_0 = x_start).
struct PathBatch {
  std::vector<double> grid;
  std::vector<std::vector<double>> values;
  double x_start = 0.0;
  std::vector<std::vector<JumpMark>> jump_marks;
  std::vector<std::uint64_t> seeds;
  std::string fingerprint;

  std::size_t size() const { return values.size(); }
  double dt() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
};

PathBatch simulate_batch(const LevyTriplet& triplet, double x_start, const SimConfig& cfg);

struct ReflectedPath {
  std::vector<double> u_values;
  std::vector<double> r_values;
  std::optional<std::size_t> tau_minus_index;  // empty = never below b on the grid
};

/// Reflection at lower barrier b by the running-minimum map, one forward pass.
ReflectedPath reflect(std::span<const double> path, double b);
std::vector<ReflectedPath> reflect(const PathBatch& batch, double b);

/// exp(-q i dt) for i = 0..n.
std::vector<double> discount_factors(double q, double dt, std::size_t n);

/// Left-endpoint rule over [t_0, t_last]: sum over i < size-1 of e^{-q t_i} g_i dt.
double discounted_integral(std::span<const double> values, double q, double dt);

/// sum_i e^{-q t_i} (R_i - R_{i-1}) with R_{-1} = 0.
double discounted_stieltjes(std::span<const double> r_values, double q, double dt);

struct SupSampleStats {
  std::uint64_t rejections = 0;
  double rejection_rate = 0.0;
};

/*!
 * Per path: draws e_q ~ Exp(q) (resampled while e_q > horizon), simulates X^0
 * on the grid up to e_q and returns the grid supremum over [0, e_q].
 * Path i uses the same X^0 stream as every other estimator.
 */
std::vector<double> sample_sup_at_exp_time(const LevyTriplet& triplet, const SimConfig& cfg,
                                           double q, SupSampleStats* stats = nullptr);

/// CSV dump with header "path,t,x".
void write_batch_csv(const PathBatch& batch, std::ostream& os);

}  // namespace levyctl
