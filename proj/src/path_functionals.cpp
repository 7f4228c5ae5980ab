#include "levyctl/path_functionals.hpp"

#include <algorithm>

namespace levyctl {

BarrierFunctionals barrier_functionals(std::span<const double> x0, double x, double b,
                                       const CostSpec& cost, std::span<const double> discount,
                                       double dt) {
  BarrierFunctionals out;
  const std::size_t n = x0.size() - 1;
  double running_min = 0.0;
  double r_prev = 0.0;
  double running = 0.0;
  double control = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double level = x + x0[i];
    const double gap = level - b;
    if (gap < 0.0) {
      if (out.tau == kNever) out.tau = i;
      running_min = std::min(running_min, gap);
    }
    const double r = -running_min;
    if (r != r_prev) {
      control += discount[i] * (r - r_prev);
      r_prev = r;
    }
    if (i < n) running += discount[i] * cost(level + r);
  }
  out.running = running * dt;
  out.control = control;
  return out;
}

double rho_functional(std::span<const double> x0, double b, const CostSpec& cost,
                      std::span<const double> discount, double dt) {
  const std::size_t n = x0.size() - 1;
  double running_min = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    running_min = std::min(running_min, x0[i]);
    acc += discount[i] * cost.derivative_plus(x0[i] - running_min + b);
  }
  return acc * dt;
}

void rho_functional_curve(std::span<const double> x0, std::span<const double> b_grid,
                          const CostSpec& cost, std::span<const double> discount, double dt,
                          std::span<double> out) {
  const std::size_t n = x0.size() - 1;
  std::fill(out.begin(), out.end(), 0.0);
  double running_min = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    running_min = std::min(running_min, x0[i]);
    const double u = x0[i] - running_min;
    for (std::size_t k = 0; k < b_grid.size(); ++k)
      out[k] += discount[i] * cost.derivative_plus(u + b_grid[k]);
  }
  for (double& v : out) v *= dt;
}

double rho_functional_from_barrier(std::span<const double> x0, double b, const CostSpec& cost,
                                   std::span<const double> discount, double dt) {
  const std::size_t n = x0.size() - 1;
  double running_min = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double level = b + x0[i];
    running_min = std::min(running_min, level - b);
    acc += discount[i] * cost.derivative_plus(level - running_min);
  }
  return acc * dt;
}

PassageFunctionals passage_functionals(std::span<const double> x0, double x, double b,
                                       const CostSpec& cost, std::span<const double> discount,
                                       double dt) {
  PassageFunctionals out;
  const std::size_t n = x0.size() - 1;
  double integral = 0.0;
  double running = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double level = x + x0[i];
    if (level < b) {
      out.tau = i;
      out.discount_tau = discount[i];
      break;
    }
    if (i < n) {
      integral += discount[i] * cost.derivative_plus(level);
      running += discount[i] * cost(level);
    }
  }
  out.integral = integral * dt;
  out.running_cost = running * dt;
  return out;
}

}  // namespace levyctl
