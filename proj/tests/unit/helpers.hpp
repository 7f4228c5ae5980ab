#pragma once

#include <cmath>
#include <vector>

#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/path_engine.hpp"

namespace testing {

inline levyctl::LevyTriplet brownian(double sigma = 1.0) {
  return levyctl::LevyTriplet(0.0, sigma, levyctl::JumpSpec::none());
}

inline levyctl::LevyTriplet pure_drift(double d) {
  return levyctl::LevyTriplet::from_effective_drift(d, 0.0, levyctl::JumpSpec::none());
}

inline levyctl::LevyTriplet kou(double sigma = 0.5, double eta = 3.0) {
  return levyctl::LevyTriplet(0.0, sigma,
                              levyctl::JumpSpec(1.0, levyctl::KouJumps{0.5, eta, eta}));
}

inline levyctl::ProblemSpec quadratic_problem(double C, double q) {
  return levyctl::ProblemSpec(levyctl::builtin_cost(levyctl::CostKind::quadratic), C, q);
}

inline levyctl::SimConfig sim(double dt, std::uint64_t n, double q, std::uint64_t seed = 1) {
  levyctl::SimConfig c;
  c.dt = dt;
  c.n_paths = n;
  c.horizon = levyctl::horizon_for(q);
  c.master_seed = seed;
  return c;
}

}  // namespace testing
