#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "levyctl/barrier_solver.hpp"
#include "levyctl/errors.hpp"
#include "levyctl/verification.hpp"

using namespace levyctl;

namespace {

std::vector<double> uniform_grid(double start, double step, int n) {
  std::vector<double> g;
  for (int k = 0; k < n; ++k) g.push_back(start + step * k);
  return g;
}

}  // namespace

TEST_CASE("check report keeps the worst point") {
  CheckReport r;
  r.add({0.0, 0.1, 1.0, true});
  r.add({1.0, -0.9, 1.0, true});
  CHECK(r.passed);
  CHECK(r.statistic == doctest::Approx(-0.9));
  r.add({2.0, 3.0, 1.0, false});
  CHECK_FALSE(r.passed);
  CHECK(r.statistic == doctest::Approx(3.0));

  std::ostringstream os;
  write_check_csv(r, os);
  CHECK(os.str().rfind("x,residual,tolerance,passed\n", 0) == 0);
}

TEST_CASE("barrier derivative: deterministic passage") {
  // Down drift 1 from x = 1 to b = 0 takes exactly one time unit, and U^0 = 0.
  // The grid sees the passage one step late, so the step is kept small.
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-4, 1, 0.5);
  const auto r = check_barrier_derivative(testing::pure_drift(-1.0), problem, 1.0, 0.0, cfg, 0.01);
  CHECK(r.passed);
  CHECK_THROWS_AS(
      check_barrier_derivative(testing::pure_drift(-1.0), problem, 0.0, 0.0, cfg, 0.01),
      ValidationError);
}

TEST_CASE("barrier derivative vanishes at the solver root") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 2000, 0.5, 3);
  const auto b = solve_barrier(testing::kou(), problem, cfg).b_star;
  const auto r = check_barrier_derivative(testing::kou(), problem, b + 0.5, b, cfg, 0.05);
  CHECK(r.passed);
  CHECK(std::abs(r.statistic) <= r.tolerance);
}

TEST_CASE("slope identity") {
  const auto problem = testing::quadratic_problem(0.8, 0.5);
  const auto cfg = testing::sim(1e-2, 1000, 0.5, 4);

  SUBCASE("below the barrier the slope is -C") {
    const auto r = check_slope_identity(testing::kou(), problem, -2.0, -1.0, cfg, 0.05);
    CHECK(r.passed);
    CHECK(std::abs(r.statistic) < 1e-9);
  }
  SUBCASE("above the barrier on random paths") {
    const auto r = check_slope_identity(testing::kou(), problem, 0.0, -1.0, cfg, 0.05);
    CHECK(r.passed);
  }
  SUBCASE("pure drift up never passes") {
    const auto r = check_slope_identity(testing::pure_drift(1.0), problem, 1.0, 0.0,
                                        testing::sim(1e-3, 1, 0.5), 0.05);
    CHECK(r.passed);
  }
}

TEST_CASE("convexity") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 1000, 0.5, 6);
  const auto r = check_convexity(testing::brownian(), problem, cfg, uniform_grid(-2.0, 0.25, 13));
  CHECK(r.passed);

  // Entirely below the barrier: second differences vanish.
  const auto below =
      check_convexity(testing::brownian(), problem, cfg, uniform_grid(-4.0, 0.25, 6), -1.0);
  CHECK(below.passed);
  for (const auto& p : below.details) CHECK(std::abs(p.residual) < 1e-9);

  CHECK_THROWS_AS(check_convexity(testing::brownian(), ProblemSpec(linear_cost(1.0), 0.0, 0.5), cfg,
                                  uniform_grid(0, 1, 5)),
                  AssumptionViolated);
  CHECK_THROWS_AS(
      check_convexity(testing::brownian(), problem, cfg, std::vector<double>{0, 1, 2, 4, 5}, -1.0),
      ValidationError);
}

TEST_CASE("martingale property of the value process") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  SUBCASE("pure drift down") {
    const auto cfg = testing::sim(1e-3, 1, 0.5);
    const auto r = check_martingale(testing::pure_drift(-1.0), problem, cfg, 1.0,
                                    std::vector<double>{0.0, 0.5, 1.0, 2.0});
    CHECK(r.passed);
  }
  SUBCASE("Brownian motion") {
    const auto cfg = testing::sim(1e-2, 2000, 0.5, 12);
    const auto r = check_martingale(testing::brownian(), problem, cfg, -0.6,
                                    std::vector<double>{0.0, 0.5, 1.0, 2.0, 4.0});
    CHECK(r.passed);
    CHECK(std::abs(r.details.front().residual) <= r.details.front().tolerance);
  }
}

TEST_CASE("HJB system for pure drift") {
  const auto problem = testing::quadratic_problem(1.0, 0.1);
  // The truncated tail leaves a residual near exp(-qT) f(x + T); 1e-4 is
  // too coarse for an x^2 cost growing along a drifting path.
  auto cfg = testing::sim(1e-3, 1, 0.1);
  cfg.horizon = horizon_for(0.1, 1e-6);
  const auto b = solve_barrier(testing::pure_drift(1.0), problem, cfg).b_star;
  const auto r = check_hjb(testing::pure_drift(1.0), problem, cfg,
                           uniform_grid(b - 1.375, 0.25, 15), 0.05, b);
  CHECK(r.passed);
  bool has_gradient = false;
  for (const auto& p : r.details) has_gradient = has_gradient || p.table == "gradient";
  CHECK(has_gradient);
}

TEST_CASE("HJB system for Brownian motion at a coarse step") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 2000, 0.5, 14);
  const auto b = solve_barrier(testing::brownian(), problem, cfg).b_star;
  const auto r = check_hjb(testing::brownian(), problem, cfg, uniform_grid(b - 1.375, 0.25, 15),
                           0.05, b);
  CHECK(r.passed);
}
