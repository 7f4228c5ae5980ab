#pragma once

#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"

namespace levyctl {

/// psi(lambda) = log E[exp(lambda X_1)] for lambda >= 0; requires no upward jumps.
double laplace_exponent(const LevyTriplet& triplet, double lambda);

/*!
 * Phi(q): the positive root of psi(lambda) = q for a spectrally negative model.
 * The supremum of X at an independent Exp(q) time is then Exp(Phi(q)).
 * Throws NotSpectrallyNegative.
 */
double phi_root(const LevyTriplet& triplet, double q);

/// Recovers (a, c) when f(x) = a (x - c)^2, otherwise throws ValidationError.
std::pair<double, double> quadratic_coefficients(const CostSpec& cost);

/*!
 * Optimal barrier for a quadratic cost a (x - c)^2 under a spectrally
 * negative model: b* = c - q C / (2 a) - 1 / Phi(q). For a = 1, c = 0 this is
 * -q C / 2 - 1 / Phi(q).
 */
double quadratic_bstar_closed_form(const LevyTriplet& triplet, const ProblemSpec& problem);

/// v_b(x) = int_0^inf e^{-qt} f(x + d t) dt for quadratic f, drift d > 0 and x >= b.
double pure_drift_value(const ProblemSpec& problem, double drift, double b, double x);

}  // namespace levyctl
