#pragma once

#include <cstddef>
#include <span>

#include "levyctl/cost_model.hpp"

namespace levyctl {

// Pathwise building blocks shared by the estimators, the solver and the
// checks. Every function takes X^0 (path started at 0) on the full grid and
// the discount table exp(-q t_i), i = 0..n.

inline constexpr std::size_t kNever = static_cast<std::size_t>(-1);

struct BarrierFunctionals {
  double running = 0.0;  // sum_{i<n} e^{-q t_i} f(U_i) dt
  double control = 0.0;  // sum_{i<=n} e^{-q t_i} (R_i - R_{i-1})
  std::size_t tau = kNever;  // first i with x + X^0_i < b
};

/// Barrier strategy at b applied to the path started at x.
BarrierFunctionals barrier_functionals(std::span<const double> x0, double x, double b,
                                       const CostSpec& cost, std::span<const double> discount,
                                       double dt);

/// sum_{i<n} e^{-q t_i} f'_+(U^0_i + b) dt with U^0 reflected at 0.
double rho_functional(std::span<const double> x0, double b, const CostSpec& cost,
                      std::span<const double> discount, double dt);

/// rho_functional for every barrier in `b_grid`, written to `out`.
void rho_functional_curve(std::span<const double> x0, std::span<const double> b_grid,
                          const CostSpec& cost, std::span<const double> discount, double dt,
                          std::span<double> out);

/// Running integral of f'_+(U^b) for the path started at b and reflected at b.
double rho_functional_from_barrier(std::span<const double> x0, double b, const CostSpec& cost,
                                   std::span<const double> discount, double dt);

struct PassageFunctionals {
  double integral = 0.0;       // sum_{i<tau} e^{-q t_i} f'_+(x + X^0_i) dt
  double discount_tau = 0.0;   // e^{-q t_tau}, 0 when the path never passes below b
  double running_cost = 0.0;   // sum_{i<tau} e^{-q t_i} f(x + X^0_i) dt
  std::size_t tau = kNever;
};

/// Killed-at-first-passage functionals of the path started at x.
PassageFunctionals passage_functionals(std::span<const double> x0, double x, double b,
                                       const CostSpec& cost, std::span<const double> discount,
                                       double dt);

}  // namespace levyctl
