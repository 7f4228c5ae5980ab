#pragma once

#include <complex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "levyctl/rng.hpp"

namespace levyctl {

/// Two-sided exponential (Kou) jump sizes.
struct KouJumps {
  double p_up = 0.5;
  double eta_up = 1.0;
  double eta_down = 1.0;
};

/// Normally distributed jump sizes.
struct GaussianJumps {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Jump sizes uniform on [lo, hi].
struct UniformJumps {
  double lo = -1.0;
  double hi = 1.0;
};

/// Finite list of jump sizes with probabilities.
struct DiscreteJumps {
  std::vector<std::pair<double, double>> atoms;  // (value, probability)
};

using JumpDistribution = std::variant<KouJumps, GaussianJumps, UniformJumps, DiscreteJumps>;

/// Probability mass and first moment of a jump law restricted to an interval.
struct PartialMoments {
  double mass = 0.0;
  double first = 0.0;
};

/*!
 * Finite-activity jump specification: Poisson intensity times a jump-size law.
 *
 * A rate of zero encodes "no jumps". Sampled jump sizes are never exactly zero.
 */
class JumpSpec {
 public:
  JumpSpec() = default;
  JumpSpec(double rate, JumpDistribution dist);

  static JumpSpec none() { return {}; }

  double rate() const { return rate_; }
  bool has_jumps() const { return rate_ > 0.0; }
  const JumpDistribution& distribution() const { return dist_; }

  /// Draws one jump size.
  double sample(StreamRng& rng) const;

  std::complex<double> characteristic_function(double lambda) const;
  /// E[J 1{|J|<1}], the truncation term of the Lévy-Khintchine triplet.
  double truncated_mean() const;
  double mean() const;
  double second_moment() const;
  /// E[e^{theta J}], +inf when the moment does not exist.
  double moment_generating(double theta) const;
  /// True iff E[e^{theta |J|}] is finite.
  bool exp_abs_moment_finite(double theta) const;

  /// P(a < J <= b) and E[J; a < J <= b]; a may be -inf and b may be +inf.
  PartialMoments partial_moments(double a, double b) const;
  /// Smallest r with P(|J| <= r) >= prob.
  double abs_quantile(double prob) const;

  bool supported_negative() const;
  bool supported_positive() const;
  bool symmetric() const;

  std::string describe() const;

 private:
  double rate_ = 0.0;
  JumpDistribution dist_ = DiscreteJumps{};
};

struct PathClass {
  bool bounded_variation = false;
  bool spectrally_negative = false;
  bool spectrally_positive = false;
  bool driftless_compound_poisson = false;
  bool negative_of_subordinator = false;
};

/*!
 * Lévy triplet (gamma, sigma, Pi) with finite-activity jumps.
 *
 * The truncation convention is resolved at construction: the simulated
 * process is X_t = d t + sigma B_t + sum of jumps with
 * d = gamma - rate * E[J 1{|J|<1}].
 */
class LevyTriplet {
 public:
  LevyTriplet(double gamma, double sigma, JumpSpec jumps, double exp_moment_theta = 1.0);

  /// Builds the triplet whose effective drift equals `drift`.
  static LevyTriplet from_effective_drift(double drift, double sigma, JumpSpec jumps,
                                          double exp_moment_theta = 1.0);

  double gamma() const { return gamma_; }
  double sigma() const { return sigma_; }
  const JumpSpec& jumps() const { return jumps_; }
  double exp_moment_theta() const { return theta_bar_; }
  double effective_drift() const { return drift_; }

  bool is_driftless_cp() const;
  /// No Gaussian part and no jumps: every path is the same straight line.
  bool is_deterministic() const { return sigma_ == 0.0 && !jumps_.has_jumps(); }

  /// Same jumps and Gaussian part with `delta` added to the effective drift.
  LevyTriplet with_added_drift(double delta) const;

  std::string describe() const;

 private:
  double gamma_;
  double sigma_;
  JumpSpec jumps_;
  double theta_bar_;
  double drift_;
};

/// Psi(lambda) with E[exp(i lambda X_t)] = exp(-t Psi(lambda)).
std::complex<double> characteristic_exponent(const LevyTriplet& triplet, double lambda);

PathClass classify(const LevyTriplet& triplet);

/// True iff E[exp(theta_bar |J|)] is finite for the declared theta_bar.
bool exp_moment_check(const LevyTriplet& triplet);

}  // namespace levyctl
