#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "levyctl/errors.hpp"
#include "levyctl/estimators.hpp"
#include "levyctl/oracles.hpp"

using namespace levyctl;

namespace {

double discrete_discount_mass(double q, double dt, std::size_t steps) {
  double s = 0.0;
  for (std::size_t i = 0; i < steps; ++i) s += std::exp(-q * dt * static_cast<double>(i)) * dt;
  return s;
}

}  // namespace

TEST_CASE("summarize: plain and antithetic standard errors") {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  const auto e = summarize(s);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(e.n == 4);
  const auto a = summarize(s, true);
  CHECK(a.mean == doctest::Approx(2.5));
  CHECK(a.std_error == doctest::Approx(1.0));

  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(summarize(bad), NonFiniteSample);
}

TEST_CASE("summarize flags heavy tails") {
  std::vector<double> s(10000, 0.0);
  s[0] = 1e6;
  const auto e = summarize(s);
  CHECK(e.kurtosis > kKurtosisLimit);
  CHECK_FALSE(e.stderr_reliable);
}

TEST_CASE("summarize_combination is computed pathwise") {
  SampleMatrix m(3, 2);
  const double vals[3][2] = {{1.0, 1.0}, {2.0, 2.5}, {3.0, 2.0}};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) m.row(r)[c] = vals[r][c];
  const std::vector<std::pair<std::size_t, double>> w{{0, 1.0}, {1, -1.0}};
  const auto d = summarize_combination(m, w, 10.0);
  CHECK(d.mean == doctest::Approx(10.0 + (0.0 - 0.5 + 1.0) / 3.0));
  CHECK(d.std_error == doctest::Approx(summarize(std::vector<double>{0.0, -0.5, 1.0}).std_error));
}

TEST_CASE("rho for a linear cost is a / q up to the discount sum") {
  const ProblemSpec problem(linear_cost(3.0), 1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 500, 0.5);
  const auto e = estimate_rho(testing::kou(), problem, 0.7, cfg, RhoMethod::time_integral);
  const double exact = 3.0 * discrete_discount_mass(0.5, cfg.dt, cfg.steps());
  CHECK(e.mean == doctest::Approx(exact).epsilon(1e-12));
  CHECK(e.std_error < 1e-10);
  CHECK(std::abs(e.mean - 3.0 / 0.5) <= 3.0 * (0.5 * cfg.dt + 1e-4) / 0.5 + 1e-12);
  const auto curve = estimate_rho_curve(testing::kou(), problem, std::vector<double>{-5, 0, 5}, cfg);
  for (const auto& [b, est] : curve) CHECK(est.mean == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("rho for pure drift and a quadratic cost") {
  const auto problem = testing::quadratic_problem(1.0, 0.1);
  SimConfig cfg = testing::sim(1e-3, 1, 0.1);
  const auto e = estimate_rho(testing::pure_drift(1.0), problem, 0.0, cfg, RhoMethod::time_integral);
  CHECK(e.mean == doctest::Approx(200.0).epsilon(2e-3));
}

TEST_CASE("time-integral and exponential-clock rho agree") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 4000, 0.5, 9);
  for (const auto& model : {testing::brownian(), testing::kou()}) {
    const auto ti = estimate_rho(model, problem, -1.25, cfg, RhoMethod::time_integral);
    const auto ec = estimate_rho(model, problem, -1.25, cfg, RhoMethod::exp_clock);
    CHECK(std::abs(ti.mean - ec.mean) <= 3.0 * std::hypot(ti.std_error, ec.std_error));
  }
}

TEST_CASE("rho limits for a bounded-slope cost") {
  const ProblemSpec problem(builtin_cost(CostKind::abs), 1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 500, 0.5);
  const double mass = discrete_discount_mass(0.5, cfg.dt, cfg.steps());
  const auto hi = estimate_rho(testing::brownian(), problem, 50.0, cfg, RhoMethod::time_integral);
  const auto lo = estimate_rho(testing::brownian(), problem, -50.0, cfg, RhoMethod::time_integral);
  CHECK(hi.mean == doctest::Approx(mass));
  CHECK(lo.mean == doctest::Approx(-mass));
  CHECK(std::abs(hi.mean - 1.0 / 0.5) < 0.01);
}

TEST_CASE("rho curve: exact monotonicity and the quadratic shift identity") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 300, 0.5);
  std::vector<double> grid;
  for (int k = 0; k <= 40; ++k) grid.push_back(-3.0 + 0.1 * k);
  const double mass = discrete_discount_mass(0.5, cfg.dt, cfg.steps());
  std::vector<double> first;
  for (const auto& model : {testing::brownian(), testing::kou()}) {
    const auto curve = estimate_rho_curve(model, problem, grid, cfg);
    for (std::size_t k = 1; k < curve.size(); ++k) {
      REQUIRE(curve[k].second.mean >= curve[k - 1].second.mean);
      const double diff = curve[k].second.mean - curve[0].second.mean;
      CHECK(diff == doctest::Approx(2.0 * (grid[k] - grid[0]) * mass).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(estimate_rho_curve(testing::brownian(), problem, std::vector<double>{1, 0}, cfg),
                  ValidationError);
}

TEST_CASE("rho from paths started at the barrier equals the shifted estimator") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 300, 0.5);
  for (double b : {-1.0, 0.4}) {
    const auto shifted = estimate_rho(testing::kou(), problem, b, cfg, RhoMethod::time_integral);
    const auto direct = estimate_rho_started_at_barrier(testing::kou(), problem, b, cfg);
    CHECK(std::abs(shifted.mean - direct.mean) <= 1e-10 * (1.0 + std::abs(shifted.mean)));
  }
}

TEST_CASE("value: pure drift oracle and component linearity") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-3, 1, 0.5);
  const auto v = estimate_value(testing::pure_drift(1.0), problem, 0.0, 0.0, cfg);
  CHECK(v.v1.mean == doctest::Approx(16.0).epsilon(0.01));
  CHECK(v.v1.mean == doctest::Approx(pure_drift_value(problem, 1.0, 0.0, 0.0)).epsilon(0.01));
  CHECK(v.v2.mean == 0.0);

  const auto sim = testing::sim(1e-2, 500, 0.5);
  const auto zero_c = estimate_value(testing::kou(), testing::quadratic_problem(0.0, 0.5), -1.0, 0.0, sim);
  CHECK(zero_c.v.mean == doctest::Approx(zero_c.v1.mean));
  const ProblemSpec flat(linear_cost(0.0), 2.0, 0.5);
  const auto no_running = estimate_value(testing::kou(), flat, -1.0, 0.0, sim);
  CHECK(no_running.v1.mean == 0.0);
  CHECK(no_running.v.mean == doctest::Approx(2.0 * no_running.v2.mean));
}

TEST_CASE("value: no cost and a strong upward drift gives almost nothing") {
  const ProblemSpec flat(linear_cost(0.0), 1.0, 0.5);
  const auto v = estimate_value(LevyTriplet(10.0, 1.0, JumpSpec::none()), flat, 0.0, 2.0,
                                testing::sim(1e-2, 500, 0.5));
  CHECK(v.v.mean < 1e-3);
}

TEST_CASE("value below the barrier is linear on common paths") {
  const auto problem = testing::quadratic_problem(0.7, 0.5);
  const auto cfg = testing::sim(1e-2, 400, 0.5);
  const double b = -0.8;
  const auto at_b = estimate_value(testing::kou(), problem, b, b, cfg);
  for (double x : {b - 1.0, b - 2.0}) {
    const auto below = estimate_value(testing::kou(), problem, b, x, cfg);
    const double identity = below.v.mean - (0.7 * (b - x) + at_b.v.mean);
    CHECK(std::abs(identity) <= 1e-9 * (1.0 + std::abs(at_b.v.mean)));
  }
}

TEST_CASE("estimates reuse a supplied batch and carry stable fingerprints") {
  const auto problem = testing::quadratic_problem(1.0, 0.5);
  const auto cfg = testing::sim(1e-2, 200, 0.5);
  const auto batch = simulate_batch(testing::brownian(), 0.0, cfg);
  const auto with_batch = estimate_value(testing::brownian(), problem, -1.0, 0.0, cfg, &batch);
  const auto fresh = estimate_value(testing::brownian(), problem, -1.0, 0.0, cfg);
  CHECK(with_batch.v.mean == doctest::Approx(fresh.v.mean).epsilon(1e-12));

  const auto a = estimate_rho(testing::brownian(), problem, 0.0, cfg, RhoMethod::time_integral);
  const auto b = estimate_rho(testing::brownian(), problem, 0.0, cfg, RhoMethod::time_integral);
  CHECK(a.fingerprint == b.fingerprint);
  CHECK(a.fingerprint.size() == 16);
  auto other = cfg;
  other.master_seed = 99;
  CHECK(estimate_rho(testing::brownian(), problem, 0.0, other, RhoMethod::time_integral).fingerprint !=
        a.fingerprint);
  CHECK(fingerprint_of("abc") == fingerprint_of("abc"));
  CHECK(fingerprint_of("abc") != fingerprint_of("abd"));
}
