#include "levyctl/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "levyctl/errors.hpp"

namespace levyctl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

void validate(const KouJumps& d) {
  if (!(d.p_up >= 0.0 && d.p_up <= 1.0)) throw InvalidModel("kou p_up must lie in [0, 1]");
  if (d.p_up > 0.0 && !(d.eta_up > 0.0 && std::isfinite(d.eta_up)))
    throw InvalidModel("kou eta_up must be positive");
  if (d.p_up < 1.0 && !(d.eta_down > 0.0 && std::isfinite(d.eta_down)))
    throw InvalidModel("kou eta_down must be positive");
}

void validate(const GaussianJumps& d) {
  if (!std::isfinite(d.mean)) throw InvalidModel("gaussian jump mean must be finite");
  if (!(d.stddev > 0.0 && std::isfinite(d.stddev)))
    throw InvalidModel("gaussian jump stddev must be positive");
}

void validate(const UniformJumps& d) {
  if (!(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo < d.hi))
    throw InvalidModel("uniform jump interval needs lo < hi");
}

void validate(const DiscreteJumps& d) {
  if (d.atoms.empty()) throw InvalidModel("discrete jump law needs at least one atom");
  double total = 0.0;
  for (const auto& [value, prob] : d.atoms) {
    if (!std::isfinite(value) || value == 0.0)
      throw InvalidModel("discrete jump atoms must be finite and nonzero");
    if (!(prob > 0.0)) throw InvalidModel("discrete jump probabilities must be positive");
    total += prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidModel("discrete jump probabilities must sum to 1");
}

// Mass and first moment of Exp(eta) restricted to (a, b], 0 <= a < b <= inf.
PartialMoments exponential_piece(double eta, double a, double b) {
  const double ea = std::exp(-eta * a);
  const double eb = std::isinf(b) ? 0.0 : std::exp(-eta * b);
  const double fa = (a + 1.0 / eta) * ea;
  const double fb = std::isinf(b) ? 0.0 : (b + 1.0 / eta) * eb;
  return {ea - eb, fa - fb};
}

}  // namespace

JumpSpec::JumpSpec(double rate, JumpDistribution dist) : rate_(rate), dist_(std::move(dist)) {
  if (!(rate >= 0.0 && std::isfinite(rate))) throw InvalidModel("jump rate must be finite and >= 0");
  if (rate > 0.0) std::visit([](const auto& d) { validate(d); }, dist_);
}

double JumpSpec::sample(StreamRng& rng) const {
  return std::visit(
      Overloaded{
          [&](const KouJumps& d) {
            const double u = rng.uniform();
            return u < d.p_up ? rng.exponential(d.eta_up) : -rng.exponential(d.eta_down);
          },
          [&](const GaussianJumps& d) {
            double j;
            do {
              j = d.mean + d.stddev * rng.normal();
            } while (j == 0.0);
            return j;
          },
          [&](const UniformJumps& d) {
            double j;
            do {
              j = d.lo + (d.hi - d.lo) * rng.uniform();
            } while (j == 0.0);
            return j;
          },
          [&](const DiscreteJumps& d) {
            const double u = rng.uniform();
            double cum = 0.0;
            for (const auto& [value, prob] : d.atoms) {
              cum += prob;
              if (u < cum) return value;
            }
            return d.atoms.back().first;
          },
      },
      dist_);
}

std::complex<double> JumpSpec::characteristic_function(double lambda) const {
  using namespace std::complex_literals;
  return std::visit(
      Overloaded{
          [&](const KouJumps& d) -> std::complex<double> {
            std::complex<double> phi = 0.0;
            if (d.p_up > 0.0) phi += d.p_up * d.eta_up / (d.eta_up - 1i * lambda);
            if (d.p_up < 1.0) phi += (1.0 - d.p_up) * d.eta_down / (d.eta_down + 1i * lambda);
            return phi;
          },
          [&](const GaussianJumps& d) -> std::complex<double> {
            return std::exp(1i * lambda * d.mean - 0.5 * d.stddev * d.stddev * lambda * lambda);
          },
          [&](const UniformJumps& d) -> std::complex<double> {
            if (lambda == 0.0) return 1.0;
            return (std::exp(1i * lambda * d.hi) - std::exp(1i * lambda * d.lo)) /
                   (1i * lambda * (d.hi - d.lo));
          },
          [&](const DiscreteJumps& d) -> std::complex<double> {
            std::complex<double> phi = 0.0;
            for (const auto& [value, prob] : d.atoms) phi += prob * std::exp(1i * lambda * value);
            return phi;
          },
      },
      dist_);
}

PartialMoments JumpSpec::partial_moments(double a, double b) const {
  if (!(a < b)) return {};
  return std::visit(
      Overloaded{
          [&](const KouJumps& d) {
            PartialMoments out;
            if (d.p_up > 0.0 && b > 0.0) {
              const auto up = exponential_piece(d.eta_up, std::max(a, 0.0), b);
              out.mass += d.p_up * up.mass;
              out.first += d.p_up * up.first;
            }
            if (d.p_up < 1.0 && a < 0.0) {
              // J = -Y with Y ~ Exp(eta_down); (a, b] maps to [-min(b,0), -a).
              const auto down = exponential_piece(d.eta_down, -std::min(b, 0.0), -a);
              out.mass += (1.0 - d.p_up) * down.mass;
              out.first -= (1.0 - d.p_up) * down.first;
            }
            return out;
          },
          [&](const GaussianJumps& d) {
            const double za = std::isinf(a) ? -kInf : (a - d.mean) / d.stddev;
            const double zb = std::isinf(b) ? kInf : (b - d.mean) / d.stddev;
            const double mass = normal_cdf(zb) - normal_cdf(za);
            const double pa = std::isinf(za) ? 0.0 : normal_pdf(za);
            const double pb = std::isinf(zb) ? 0.0 : normal_pdf(zb);
            return PartialMoments{mass, d.mean * mass + d.stddev * (pa - pb)};
          },
          [&](const UniformJumps& d) {
            const double lo = std::max(a, d.lo);
            const double hi = std::min(b, d.hi);
            if (!(lo < hi)) return PartialMoments{};
            const double width = d.hi - d.lo;
            return PartialMoments{(hi - lo) / width, 0.5 * (hi * hi - lo * lo) / width};
          },
          [&](const DiscreteJumps& d) {
            PartialMoments out;
            for (const auto& [value, prob] : d.atoms) {
              if (value > a && value <= b) {
                out.mass += prob;
                out.first += prob * value;
              }
            }
            return out;
          },
      },
      dist_);
}

double JumpSpec::truncated_mean() const {
  if (!has_jumps()) return 0.0;
  if (const auto* d = std::get_if<DiscreteJumps>(&dist_)) {
    double s = 0.0;
    for (const auto& [value, prob] : d->atoms)
      if (std::abs(value) < 1.0) s += prob * value;
    return s;
  }
  return partial_moments(-1.0, 1.0).first;
}

double JumpSpec::mean() const { return partial_moments(-kInf, kInf).first; }

double JumpSpec::second_moment() const {
  return std::visit(
      Overloaded{
          [](const KouJumps& d) {
            double m = 0.0;
            if (d.p_up > 0.0) m += 2.0 * d.p_up / (d.eta_up * d.eta_up);
            if (d.p_up < 1.0) m += 2.0 * (1.0 - d.p_up) / (d.eta_down * d.eta_down);
            return m;
          },
          [](const GaussianJumps& d) { return d.mean * d.mean + d.stddev * d.stddev; },
          [](const UniformJumps& d) { return (d.lo * d.lo + d.lo * d.hi + d.hi * d.hi) / 3.0; },
          [](const DiscreteJumps& d) {
            double m = 0.0;
            for (const auto& [value, prob] : d.atoms) m += prob * value * value;
            return m;
          },
      },
      dist_);
}

double JumpSpec::moment_generating(double theta) const {
  return std::visit(
      Overloaded{
          [&](const KouJumps& d) {
            double m = 0.0;
            if (d.p_up > 0.0) {
              if (theta >= d.eta_up) return kInf;
              m += d.p_up * d.eta_up / (d.eta_up - theta);
            }
            if (d.p_up < 1.0) {
              if (theta <= -d.eta_down) return kInf;
              m += (1.0 - d.p_up) * d.eta_down / (d.eta_down + theta);
            }
            return m;
          },
          [&](const GaussianJumps& d) {
            return std::exp(theta * d.mean + 0.5 * theta * theta * d.stddev * d.stddev);
          },
          [&](const UniformJumps& d) {
            const double width = d.hi - d.lo;
            if (theta == 0.0) return 1.0;
            return std::exp(theta * d.lo) * std::expm1(theta * width) / (theta * width);
          },
          [&](const DiscreteJumps& d) {
            double m = 0.0;
            for (const auto& [value, prob] : d.atoms) m += prob * std::exp(theta * value);
            return m;
          },
      },
      dist_);
}

bool JumpSpec::exp_abs_moment_finite(double theta) const {
  if (!has_jumps()) return true;
  if (const auto* d = std::get_if<KouJumps>(&dist_)) {
    const bool up_ok = d->p_up == 0.0 || theta < d->eta_up;
    const bool down_ok = d->p_up == 1.0 || theta < d->eta_down;
    return up_ok && down_ok;
  }
  return true;
}

double JumpSpec::abs_quantile(double prob) const {
  if (!has_jumps()) return 0.0;
  if (const auto* d = std::get_if<DiscreteJumps>(&dist_)) {
    std::vector<std::pair<double, double>> by_abs;
    for (const auto& [value, p] : d->atoms) by_abs.emplace_back(std::abs(value), p);
    std::sort(by_abs.begin(), by_abs.end());
    double cum = 0.0;
    for (const auto& [r, p] : by_abs) {
      cum += p;
      if (cum >= prob) return r;
    }
    return by_abs.back().first;
  }
  auto covered = [&](double r) { return partial_moments(-r, r).mass; };
  double hi = 1.0;
  while (covered(hi) < prob) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (covered(mid) < prob ? lo : hi) = mid;
  }
  return hi;
}

bool JumpSpec::supported_negative() const {
  return std::visit(Overloaded{
                        [](const KouJumps& d) { return d.p_up == 0.0; },
                        [](const GaussianJumps&) { return false; },
                        [](const UniformJumps& d) { return d.hi <= 0.0; },
                        [](const DiscreteJumps& d) {
                          return std::all_of(d.atoms.begin(), d.atoms.end(),
                                             [](const auto& a) { return a.first < 0.0; });
                        },
                    },
                    dist_);
}

bool JumpSpec::supported_positive() const {
  return std::visit(Overloaded{
                        [](const KouJumps& d) { return d.p_up == 1.0; },
                        [](const GaussianJumps&) { return false; },
                        [](const UniformJumps& d) { return d.lo >= 0.0; },
                        [](const DiscreteJumps& d) {
                          return std::all_of(d.atoms.begin(), d.atoms.end(),
                                             [](const auto& a) { return a.first > 0.0; });
                        },
                    },
                    dist_);
}

bool JumpSpec::symmetric() const {
  return std::visit(Overloaded{
                        [](const KouJumps& d) { return d.p_up == 0.5 && d.eta_up == d.eta_down; },
                        [](const GaussianJumps& d) { return d.mean == 0.0; },
                        [](const UniformJumps& d) { return d.lo == -d.hi; },
                        [](const DiscreteJumps& d) {
                          for (const auto& [value, prob] : d.atoms) {
                            const bool mirrored =
                                std::any_of(d.atoms.begin(), d.atoms.end(), [&](const auto& o) {
                                  return o.first == -value && o.second == prob;
                                });
                            if (!mirrored) return false;
                          }
                          return true;
                        },
                    },
                    dist_);
}

std::string JumpSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "rate=" << rate_;
  if (!has_jumps()) return os.str();
  std::visit(Overloaded{
                 [&](const KouJumps& d) {
                   os << ";kou(" << d.p_up << "," << d.eta_up << "," << d.eta_down << ")";
                 },
                 [&](const GaussianJumps& d) {
                   os << ";gaussian(" << d.mean << "," << d.stddev << ")";
                 },
                 [&](const UniformJumps& d) { os << ";uniform(" << d.lo << "," << d.hi << ")"; },
                 [&](const DiscreteJumps& d) {
                   os << ";discrete(";
                   for (const auto& [value, prob] : d.atoms) os << value << ":" << prob << ",";
                   os << ")";
                 },
             },
             dist_);
  return os.str();
}

LevyTriplet::LevyTriplet(double gamma, double sigma, JumpSpec jumps, double exp_moment_theta)
    : gamma_(gamma),
      sigma_(sigma),
      jumps_(std::move(jumps)),
      theta_bar_(exp_moment_theta),
      drift_(gamma - jumps_.rate() * jumps_.truncated_mean()) {
  if (!std::isfinite(gamma)) throw InvalidModel("gamma must be finite");
  if (!(sigma >= 0.0 && std::isfinite(sigma))) throw InvalidModel("sigma must be finite and >= 0");
  if (!(exp_moment_theta > 0.0)) throw InvalidModel("theta_bar must be positive");
}

LevyTriplet LevyTriplet::from_effective_drift(double drift, double sigma, JumpSpec jumps,
                                              double exp_moment_theta) {
  const double gamma = drift + jumps.rate() * jumps.truncated_mean();
  LevyTriplet t(gamma, sigma, std::move(jumps), exp_moment_theta);
  t.drift_ = drift;
  return t;
}

bool LevyTriplet::is_driftless_cp() const {
  return sigma_ == 0.0 && drift_ == 0.0 && jumps_.has_jumps();
}

LevyTriplet LevyTriplet::with_added_drift(double delta) const {
  return from_effective_drift(drift_ + delta, sigma_, jumps_, theta_bar_);
}

std::string LevyTriplet::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "levy(gamma=" << gamma_ << ",sigma=" << sigma_ << ",drift=" << drift_ << ","
     << jumps_.describe() << ",theta=" << theta_bar_ << ")";
  return os.str();
}

std::complex<double> characteristic_exponent(const LevyTriplet& triplet, double lambda) {
  using namespace std::complex_literals;
  std::complex<double> psi =
      -1i * triplet.gamma() * lambda + 0.5 * triplet.sigma() * triplet.sigma() * lambda * lambda;
  const auto& jumps = triplet.jumps();
  if (jumps.has_jumps()) {
    psi += jumps.rate() * (1.0 - jumps.characteristic_function(lambda) +
                           1i * lambda * jumps.truncated_mean());
  }
  return psi;
}

PathClass classify(const LevyTriplet& triplet) {
  const auto& jumps = triplet.jumps();
  const double d = triplet.effective_drift();
  const bool gaussian = triplet.sigma() > 0.0;
  const bool no_up_jumps = !jumps.has_jumps() || jumps.supported_negative();
  const bool no_down_jumps = !jumps.has_jumps() || jumps.supported_positive();
  const bool zero_process = !gaussian && !jumps.has_jumps() && d == 0.0;

  PathClass c;
  c.bounded_variation = !gaussian;
  c.negative_of_subordinator = !gaussian && d <= 0.0 && no_up_jumps && !zero_process;
  const bool subordinator = !gaussian && d >= 0.0 && no_down_jumps && !zero_process;
  c.spectrally_negative = no_up_jumps && !c.negative_of_subordinator && !zero_process;
  c.spectrally_positive = no_down_jumps && !subordinator && !zero_process;
  c.driftless_compound_poisson = triplet.is_driftless_cp();
  return c;
}

bool exp_moment_check(const LevyTriplet& triplet) {
  return triplet.jumps().exp_abs_moment_finite(triplet.exp_moment_theta());
}

}  // namespace levyctl
