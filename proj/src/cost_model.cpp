#include "levyctl/cost_model.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "levyctl/errors.hpp"

namespace levyctl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// p(x) = sum_k coef[k] (x - origin)^k
struct PolyPiece {
  double origin = 0.0;
  std::vector<double> coef;

  // r-th derivative at x.
  double derivative(int r, double x) const {
    const double u = x - origin;
    double acc = 0.0;
    for (int k = static_cast<int>(coef.size()) - 1; k >= r; --k) {
      double falling = 1.0;
      for (int j = 0; j < r; ++j) falling *= static_cast<double>(k - j);
      acc = acc * u + coef[static_cast<std::size_t>(k)] * falling;
    }
    return acc;
  }

  int degree() const { return static_cast<int>(coef.size()) - 1; }

  // First-derivative coefficients, cached because f'_+ sits in every inner loop.
  std::vector<double> slope_coef;

  void prepare() {
    slope_coef.clear();
    for (std::size_t k = 1; k < coef.size(); ++k)
      slope_coef.push_back(coef[k] * static_cast<double>(k));
  }

  double slope(double x) const {
    const double u = x - origin;
    double acc = 0.0;
    for (auto it = slope_coef.rbegin(); it != slope_coef.rend(); ++it) acc = acc * u + *it;
    return acc;
  }
};

class PiecewisePolynomialCost final : public CostFunction {
 public:
  PiecewisePolynomialCost(std::string name, std::vector<double> breaks,
                          std::vector<PolyPiece> pieces)
      : name_(std::move(name)), breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
    for (auto& p : pieces_) p.prepare();
  }

  double value(double x) const override { return pieces_[right_index(x)].derivative(0, x); }
  double derivative_plus(double x) const override {
    return pieces_[right_index(x)].slope(x);
  }
  double derivative_minus(double x) const override {
    return pieces_[left_index(x)].derivative(1, x);
  }
  double second_derivative(double x) const override {
    return pieces_[right_index(x)].derivative(2, x);
  }
  std::vector<double> kinks() const override { return breaks_; }
  std::string describe() const override { return name_; }

  /*!
   * E[g(x - S)] with g the r-th derivative of this cost (right-continuous at
   * breaks) and S the sum of two independent U(0, eps), i.e. the triangular
   * kernel k(s) = min(s, 2 eps - s) / eps^2 on [0, 2 eps].
   */
  double kernel_mean(int r, double x, double eps) const {
    std::vector<double> cuts{0.0, eps, 2.0 * eps};
    for (double k : breaks_)
      if (k > x - 2.0 * eps && k < x) cuts.push_back(x - k);
    if (cuts.size() == 3) {
      // Whole kernel support on one piece: use the moments of S directly.
      const auto& piece = pieces_[right_index(x - eps)];
      double acc = 0.0;
      double eps_pow = 1.0;
      double factorial = 1.0;
      for (int m = 0; m + r <= piece.degree(); ++m) {
        if (m > 0) {
          eps_pow *= eps;
          factorial *= m;
        }
        const double moment = eps_pow * 2.0 * (std::pow(2.0, m + 1) - 1.0) / ((m + 1.0) * (m + 2.0));
        const double taylor = piece.derivative(r + m, x) / factorial;
        acc += (m % 2 == 0 ? taylor : -taylor) * moment;
      }
      return acc;
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double s0 = cuts[i];
      const double s1 = cuts[i + 1];
      if (!(s1 > s0)) continue;
      const auto& piece = pieces_[right_index(x - 0.5 * (s0 + s1))];
      // Kernel is alpha + beta s on this subinterval.
      const bool rising = s1 <= eps;
      const double alpha = rising ? 0.0 : 2.0 / eps;
      const double beta = (rising ? 1.0 : -1.0) / (eps * eps);
      double factorial = 1.0;
      for (int m = 0; m + r <= piece.degree(); ++m) {
        if (m > 0) factorial *= m;
        const double taylor = piece.derivative(r + m, x) / factorial;
        const double i1 = (std::pow(s1, m + 1) - std::pow(s0, m + 1)) / (m + 1.0);
        const double i2 = (std::pow(s1, m + 2) - std::pow(s0, m + 2)) / (m + 2.0);
        const double term = taylor * (alpha * i1 + beta * i2);
        total += m % 2 == 0 ? term : -term;
      }
    }
    return total;
  }

 private:
  std::size_t right_index(double x) const {
    if (breaks_.empty()) return 0;
    return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) -
                                    breaks_.begin());
  }
  std::size_t left_index(double x) const {
    return static_cast<std::size_t>(std::lower_bound(breaks_.begin(), breaks_.end(), x) -
                                    breaks_.begin());
  }

  std::string name_;
  std::vector<double> breaks_;
  std::vector<PolyPiece> pieces_;
};

class CallableCost final : public CostFunction {
 public:
  CallableCost(std::string name, std::function<double(double)> f,
               std::function<double(double)> fp, std::function<double(double)> fm,
               std::vector<double> kinks)
      : name_(std::move(name)),
        f_(std::move(f)),
        fp_(std::move(fp)),
        fm_(std::move(fm)),
        kinks_(std::move(kinks)) {}

  double value(double x) const override { return f_(x); }
  double derivative_plus(double x) const override { return fp_(x); }
  double derivative_minus(double x) const override { return fm_(x); }
  std::vector<double> kinks() const override { return kinks_; }
  std::string describe() const override { return "custom(" + name_ + ")"; }

 private:
  std::string name_;
  std::function<double(double)> f_;
  std::function<double(double)> fp_;
  std::function<double(double)> fm_;
  std::vector<double> kinks_;
};

class MollifiedPolynomialCost final : public CostFunction {
 public:
  MollifiedPolynomialCost(std::shared_ptr<const PiecewisePolynomialCost> base, double eps,
                          double anchor)
      : base_(std::move(base)),
        eps_(eps),
        anchor_(anchor),
        anchor_offset_(base_->value(anchor) - base_->kernel_mean(0, anchor, eps)) {}

  double value(double x) const override {
    if (x == anchor_) return base_->value(anchor_);
    return anchor_offset_ + base_->kernel_mean(0, x, eps_);
  }
  double derivative_plus(double x) const override { return base_->kernel_mean(1, x, eps_); }
  double derivative_minus(double x) const override { return derivative_plus(x); }
  double second_derivative(double x) const override {
    return (base_->value(x) - 2.0 * base_->value(x - eps_) + base_->value(x - 2.0 * eps_)) /
           (eps_ * eps_);
  }
  std::string describe() const override {
    return "mollified(" + base_->describe() + ",eps=" + fmt(eps_) + ",anchor=" + fmt(anchor_) + ")";
  }

 private:
  std::shared_ptr<const PiecewisePolynomialCost> base_;
  double eps_;
  double anchor_;
  double anchor_offset_;
};

class MollifiedCallableCost final : public CostFunction {
 public:
  MollifiedCallableCost(CostSpec base, double eps, double anchor)
      : base_(std::move(base)), eps_(eps), anchor_(anchor) {
    anchor_offset_ = base_(anchor) - kernel_mean([this](double y) { return base_(y); }, anchor);
  }

  double value(double x) const override {
    if (x == anchor_) return base_(anchor_);
    return anchor_offset_ + kernel_mean([this](double y) { return base_(y); }, x);
  }
  double derivative_plus(double x) const override {
    return kernel_mean([this](double y) { return base_.derivative_plus(y); }, x);
  }
  double derivative_minus(double x) const override { return derivative_plus(x); }
  double second_derivative(double x) const override {
    return (base_(x) - 2.0 * base_(x - eps_) + base_(x - 2.0 * eps_)) / (eps_ * eps_);
  }
  std::string describe() const override {
    return "mollified(" + base_.describe() + ",eps=" + fmt(eps_) + ",anchor=" + fmt(anchor_) + ")";
  }

 private:
  template <class G>
  double kernel_mean(G g, double x) const {
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> cuts{0.0, eps_, 2.0 * eps_};
    for (double k : base_.kinks())
      if (k > x - 2.0 * eps_ && k < x) cuts.push_back(x - k);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (!(cuts[i + 1] > cuts[i])) continue;
      auto integrand = [&](double s) {
        const double k = s <= eps_ ? s : 2.0 * eps_ - s;
        return g(x - s) * k / (eps_ * eps_);
      };
      total += gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-13);
    }
    return total;
  }

  CostSpec base_;
  double eps_;
  double anchor_;
  double anchor_offset_ = 0.0;
};

}  // namespace

double CostFunction::second_derivative(double) const { return kNaN; }

CostSpec::CostSpec(std::shared_ptr<const CostFunction> impl, GrowthBound growth,
                   std::pair<double, double> slope_limits)
    : impl_(std::move(impl)), growth_(growth), slope_limits_(slope_limits) {}

CostSpec CostSpec::custom(std::string name, std::function<double(double)> f,
                          std::function<double(double)> f_prime_plus,
                          std::function<double(double)> f_prime_minus, GrowthBound growth,
                          std::pair<double, double> slope_limits, std::vector<double> kinks) {
  return CostSpec(std::make_shared<CallableCost>(std::move(name), std::move(f),
                                                 std::move(f_prime_plus), std::move(f_prime_minus),
                                                 std::move(kinks)),
                  growth, slope_limits);
}

CostSpec builtin_cost(CostKind kind, const CostParams& p) {
  if (kind != CostKind::piecewise_linear && !(p.scale > 0.0 && std::isfinite(p.scale)))
    throw NonConvexSpec("cost scale must be positive");
  const double a = p.scale;
  const double c = p.center;
  switch (kind) {
    case CostKind::quadratic: {
      auto impl = std::make_shared<PiecewisePolynomialCost>(
          "quadratic(a=" + fmt(a) + ",c=" + fmt(c) + ")", std::vector<double>{},
          std::vector<PolyPiece>{{c, {0.0, 0.0, a}}});
      return CostSpec(impl, {2.0 * a * c * c, 2.0 * a, 2}, {-kInf, kInf});
    }
    case CostKind::quartic: {
      auto impl = std::make_shared<PiecewisePolynomialCost>(
          "quartic(a=" + fmt(a) + ",c=" + fmt(c) + ")", std::vector<double>{},
          std::vector<PolyPiece>{{c, {0.0, 0.0, 0.0, 0.0, a}}});
      return CostSpec(impl, {8.0 * a * std::pow(c, 4), 8.0 * a, 4}, {-kInf, kInf});
    }
    case CostKind::abs: {
      auto impl = std::make_shared<PiecewisePolynomialCost>(
          "abs(a=" + fmt(a) + ",c=" + fmt(c) + ")", std::vector<double>{c},
          std::vector<PolyPiece>{{c, {0.0, -a}}, {c, {0.0, a}}});
      return CostSpec(impl, {a * std::abs(c), a, 1}, {-a, a});
    }
    case CostKind::piecewise_linear: {
      const auto& s = p.slopes;
      const auto& k = p.kinks;
      if (s.empty()) throw NonConvexSpec("piecewise_linear needs at least one slope");
      if (k.size() + 1 != s.size())
        throw NonConvexSpec("piecewise_linear needs exactly one kink fewer than slopes");
      for (std::size_t i = 0; i + 1 < s.size(); ++i)
        if (!(s[i] <= s[i + 1])) throw NonConvexSpec("piecewise_linear slopes must be nondecreasing");
      for (std::size_t i = 0; i + 1 < k.size(); ++i)
        if (!(k[i] < k[i + 1])) throw NonConvexSpec("piecewise_linear kinks must be increasing");
      // Value at a point by integrating the step derivative from 0.
      auto slope_on = [&](std::size_t piece) { return s[piece]; };
      auto value_at = [&](double x) {
        double v = p.value_at_zero;
        const double lo = std::min(0.0, x);
        const double hi = std::max(0.0, x);
        for (std::size_t j = 0; j < s.size(); ++j) {
          const double left = j == 0 ? -kInf : k[j - 1];
          const double right = j + 1 == s.size() ? kInf : k[j];
          const double overlap = std::min(hi, right) - std::max(lo, left);
          if (overlap > 0.0) v += (x >= 0.0 ? 1.0 : -1.0) * slope_on(j) * overlap;
        }
        return v;
      };
      std::vector<PolyPiece> pieces;
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double origin = k.empty() ? 0.0 : (j == 0 ? k[0] : k[j - 1]);
        pieces.push_back({origin, {value_at(origin), s[j]}});
      }
      std::ostringstream name;
      name.precision(17);
      name << "piecewise_linear(v0=" << p.value_at_zero << ";s=";
      for (double v : s) name << v << ",";
      name << ";k=";
      for (double v : k) name << v << ",";
      name << ")";
      double max_slope = 0.0;
      for (double v : s) max_slope = std::max(max_slope, std::abs(v));
      auto impl = std::make_shared<PiecewisePolynomialCost>(name.str(), k, std::move(pieces));
      return CostSpec(impl, {std::abs(p.value_at_zero), max_slope, 1}, {s.front(), s.back()});
    }
  }
  throw NonConvexSpec("unknown cost kind");
}

CostSpec linear_cost(double slope) {
  CostParams p;
  p.slopes = {slope};
  return builtin_cost(CostKind::piecewise_linear, p);
}

CostSpec mollify(const CostSpec& cost, double epsilon, double anchor) {
  if (!(epsilon > 0.0 && std::isfinite(epsilon))) throw InvalidModel("epsilon must be positive");
  const auto& g = cost.growth();
  const double two_eps = 2.0 * epsilon;
  const double spread = g.degree > 0 ? std::pow(2.0, g.degree - 1) : 1.0;
  GrowthBound growth{g.k1 + std::abs(cost(anchor)) + std::abs(cost(anchor - two_eps)) + g.k1 +
                         g.k2 * spread * std::pow(two_eps, g.degree),
                     g.k2 * std::max(1.0, spread), g.degree};
  std::shared_ptr<const CostFunction> impl;
  // Builtin families share a base class we can integrate exactly; anything
  // else goes through quadrature.
  if (auto* poly = dynamic_cast<const PiecewisePolynomialCost*>(&cost.function())) {
    auto base = std::make_shared<PiecewisePolynomialCost>(*poly);
    impl = std::make_shared<MollifiedPolynomialCost>(std::move(base), epsilon, anchor);
  } else {
    impl = std::make_shared<MollifiedCallableCost>(cost, epsilon, anchor);
  }
  return CostSpec(std::move(impl), growth, cost.slope_limits());
}

ProblemSpec::ProblemSpec(CostSpec cost_spec, double control_cost, double discount)
    : cost(std::move(cost_spec)), C(control_cost), q(discount) {
  if (!(discount > 0.0 && std::isfinite(discount)))
    throw InvalidModel("discount factor q must be positive");
  if (!std::isfinite(control_cost)) throw InvalidModel("control cost C must be finite");
}

bool ProblemSpec::admissible() const {
  const double target = -C * q;
  return cost.slope_limits().first < target && target < cost.slope_limits().second;
}

std::string ProblemSpec::describe() const {
  return "problem(" + cost.describe() + ",C=" + fmt(C) + ",q=" + fmt(q) + ")";
}

CostCheck check_cost(const CostSpec& cost, const std::vector<double>& grid) {
  CostCheck out;
  constexpr double h = 1e-6;
  double prev_plus = -kInf;
  auto sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  for (double x : sorted) {
    const double fp = cost.derivative_plus(x);
    const double fm = cost.derivative_minus(x);
    const double slack = 1e-12 * (1.0 + std::abs(fp));
    if (fm > fp + slack || fp < prev_plus - slack) out.convex = false;
    prev_plus = fp;

    const double tol = 1e-6 * (1.0 + std::abs(fp));
    const double fd = (cost(x + h) - cost(x)) / h;
    const double below = fp - tol - fd;
    const double above = fd - (cost.derivative_plus(x + h) + tol);
    const double violation = std::max({below, above, 0.0});
    out.worst_fd_violation = std::max(out.worst_fd_violation, violation);
    if (violation > 0.0) out.fd_consistent = false;

    const auto& g = cost.growth();
    if (std::abs(cost(x)) > g.k1 + g.k2 * std::pow(std::abs(x), g.degree) + 1e-9)
      out.growth_ok = false;
  }
  return out;
}

}  // namespace levyctl
