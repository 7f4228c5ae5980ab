#include "levyctl/oracles.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>

#include "levyctl/errors.hpp"

namespace levyctl {

double laplace_exponent(const LevyTriplet& triplet, double lambda) {
  const auto& jumps = triplet.jumps();
  const double s = triplet.sigma();
  double psi = triplet.effective_drift() * lambda + 0.5 * s * s * lambda * lambda;
  if (jumps.has_jumps()) psi += jumps.rate() * (jumps.moment_generating(lambda) - 1.0);
  return psi;
}

double phi_root(const LevyTriplet& triplet, double q) {
  if (!classify(triplet).spectrally_negative)
    throw NotSpectrallyNegative("Phi(q) needs a spectrally negative model");
  if (!(q > 0.0)) throw ValidationError("q must be positive");
  auto excess = [&](double lambda) { return laplace_exponent(triplet, lambda) - q; };
  double hi = 1.0;
  for (int i = 0; excess(hi) <= 0.0; ++i) {
    if (i > 200) throw NumericError("could not bracket Phi(q)");
    hi *= 2.0;
  }
  // Bracketing hybrid (TOMS 748): safe like bisection, superlinear near the root.
  std::uintmax_t max_iter = 200;
  const auto [lo_root, hi_root] = boost::math::tools::toms748_solve(
      excess, 0.0, hi, -q, excess(hi), boost::math::tools::eps_tolerance<double>(52), max_iter);
  double root = 0.5 * (lo_root + hi_root);
  // One secant polish against the bracket ends.
  const double f_lo = excess(lo_root);
  const double f_hi = excess(hi_root);
  if (f_hi != f_lo) {
    const double candidate = lo_root - f_lo * (hi_root - lo_root) / (f_hi - f_lo);
    if (std::abs(excess(candidate)) < std::abs(excess(root))) root = candidate;
  }
  if (std::abs(excess(root)) > 1e-10 * std::max(1.0, q))
    throw NumericError("Phi(q) root residual above tolerance");
  return root;
}

std::pair<double, double> quadratic_coefficients(const CostSpec& cost) {
  const double a = 0.5 * (cost.derivative_plus(1.0) - cost.derivative_plus(0.0));
  if (!(a > 0.0)) throw ValidationError("cost is not a convex quadratic");
  const double c = -cost.derivative_plus(0.0) / (2.0 * a);
  for (double x : {-7.5, -1.0, 0.0, 0.3, 2.0, 11.0}) {
    const double expected = a * (x - c) * (x - c);
    if (std::abs(cost(x) - expected) > 1e-9 * (1.0 + std::abs(expected)))
      throw ValidationError("cost is not of the form a (x - c)^2");
  }
  return {a, c};
}

double quadratic_bstar_closed_form(const LevyTriplet& triplet, const ProblemSpec& problem) {
  const auto [a, c] = quadratic_coefficients(problem.cost);
  const double phi = phi_root(triplet, problem.q);
  return c - problem.q * problem.C / (2.0 * a) - 1.0 / phi;
}

double pure_drift_value(const ProblemSpec& problem, double drift, double b, double x) {
  if (!(drift > 0.0)) throw ValidationError("pure drift value needs a positive drift");
  if (x < b) throw ValidationError("pure drift value needs x >= b");
  const auto [a, c] = quadratic_coefficients(problem.cost);
  const double q = problem.q;
  const double y = x - c;
  return a * (y * y / q + 2.0 * y * drift / (q * q) + 2.0 * drift * drift / (q * q * q));
}

}  // namespace levyctl
