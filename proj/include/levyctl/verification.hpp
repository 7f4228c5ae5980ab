#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/path_engine.hpp"

namespace levyctl {

struct CheckPoint {
  double x = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  /// "two_sided" (|residual| <= tolerance) or "lower" (residual >= -tolerance).
  std::string sense = "two_sided";
  /// Which table the row belongs to; "main" unless a check reports several.
  std::string table = "main";
};

/*!
 * Outcome of one numerical check. `statistic` and `tolerance` come from the
 * point with the largest |residual| / tolerance ratio; `passed` holds only if
 * every point passed.
 */
struct CheckReport {
  std::string name;
  double statistic = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::vector<CheckPoint> details;
  std::vector<std::string> notes;

  void add(CheckPoint p);
};

/*!
 * [v_{b+h}(x) - v_b(x)] / h against E_x[e^{-q tau_b}] (rho(b) + C), all on one
 * batch. The product is linearised pathwise (delta method) so the reported
 * standard error is that of the difference. Allowance: 3 stderr plus
 * (h/2) |v''| with v'' from the second difference in b.
 */
CheckReport check_barrier_derivative(const LevyTriplet& triplet, const ProblemSpec& problem,
                                     double x, double b, const SimConfig& cfg, double h);

/// Central difference in x of v_b against E_x[int_0^tau e^{-qt} f'_+(X_t) dt] - C E_x[e^{-q tau}].
CheckReport check_slope_identity(const LevyTriplet& triplet, const ProblemSpec& problem, double x,
                                 double b, const SimConfig& cfg, double h);

/// Second differences of v_{b*} on a uniform grid are >= -3 propagated stderr.
CheckReport check_convexity(const LevyTriplet& triplet, const ProblemSpec& problem,
                            const SimConfig& cfg, std::span<const double> x_grid,
                            std::optional<double> b_star = std::nullopt);

struct MartingaleSettings {
  /// Target spacing of the value interpolant grid.
  double grid_step = 0.05;
  /// Seed offset of the independent batch that builds the interpolant.
  std::uint64_t interpolant_seed_offset = 0x5bd1e995ULL;
};

/*!
 * m(t) = E_x[e^{-q (tau ^ t)} v(X_{tau ^ t}) + int_0^{tau ^ t} e^{-qs} f(X_s) ds]
 * stays at v(x). v is a piecewise-linear interpolant of v_{b*} estimated on an
 * independent batch, extended by C (b* - y) + v(b*) below b*.
 */
CheckReport check_martingale(const LevyTriplet& triplet, const ProblemSpec& problem,
                             const SimConfig& cfg, double x, std::span<const double> t_grid,
                             std::optional<double> b_star = std::nullopt,
                             const MartingaleSettings& settings = {});

/*!
 * HJB system for v_{b*} at each point of `x_grid`: (L - q) v + f = 0 above b*
 * and >= 0 below, plus v' + C = 0 below b* and >= 0 above. Rows of the
 * generator residual go to table "main", rows of v' + C to table "gradient".
 *
 * Per-point tolerance = 3 propagated stderr + finite-difference allowance
 * |R(h) - R(2h)| / 3 + jump quadrature bound + time-step allowance
 * dt |(L - q) f(x)|.
 */
CheckReport check_hjb(const LevyTriplet& triplet, const ProblemSpec& problem, const SimConfig& cfg,
                      std::span<const double> x_grid, double fd_h,
                      std::optional<double> b_star = std::nullopt);

/// Rows of one table as CSV "x,residual,tolerance,passed".
void write_check_csv(const CheckReport& report, std::ostream& os, const std::string& table = "main");

}  // namespace levyctl
