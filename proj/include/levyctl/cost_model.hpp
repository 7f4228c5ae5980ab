#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace levyctl {

/// Certificate |f(x)| <= k1 + k2 |x|^degree.
struct GrowthBound {
  double k1 = 0.0;
  double k2 = 0.0;
  int degree = 0;
};

/// Interface behind CostSpec. Implementations must be pure and reentrant.
class CostFunction {
 public:
  virtual ~CostFunction() = default;
  virtual double value(double x) const = 0;
  virtual double derivative_plus(double x) const = 0;
  virtual double derivative_minus(double x) const = 0;
  /// NaN where no closed form is available.
  virtual double second_derivative(double x) const;
  /// Points where the derivative may jump; empty for C^1 costs.
  virtual std::vector<double> kinks() const { return {}; }
  virtual std::string describe() const = 0;
};

/*!
 * Convex running cost f with one-sided derivatives.
 *
 * Holds the growth certificate and the limits f'_+(-inf), f'_+(+inf) used by
 * the admissibility predicate. Cheap to copy; the function object is shared.
 */
class CostSpec {
 public:
  CostSpec(std::shared_ptr<const CostFunction> impl, GrowthBound growth,
           std::pair<double, double> slope_limits);

  /// Wraps arbitrary callables; kinks are optional hints for quadrature.
  static CostSpec custom(std::string name, std::function<double(double)> f,
                         std::function<double(double)> f_prime_plus,
                         std::function<double(double)> f_prime_minus, GrowthBound growth,
                         std::pair<double, double> slope_limits, std::vector<double> kinks = {});

  double operator()(double x) const { return impl_->value(x); }
  double derivative_plus(double x) const { return impl_->derivative_plus(x); }
  double derivative_minus(double x) const { return impl_->derivative_minus(x); }
  double second_derivative(double x) const { return impl_->second_derivative(x); }
  std::vector<double> kinks() const { return impl_->kinks(); }

  const GrowthBound& growth() const { return growth_; }
  /// (f'_+(-inf), f'_+(+inf)) as extended reals.
  const std::pair<double, double>& slope_limits() const { return slope_limits_; }
  const CostFunction& function() const { return *impl_; }
  std::string describe() const { return impl_->describe(); }

 private:
  std::shared_ptr<const CostFunction> impl_;
  GrowthBound growth_;
  std::pair<double, double> slope_limits_;
};

enum class CostKind { quadratic, abs, piecewise_linear, quartic };

struct CostParams {
  double scale = 1.0;   // a in a*g(x - center)
  double center = 0.0;
  std::vector<double> slopes;  // piecewise_linear only
  std::vector<double> kinks;   // piecewise_linear only, strictly increasing
  double value_at_zero = 0.0;  // piecewise_linear only
};

/// Builtin cost families with exact one-sided derivatives. Throws NonConvexSpec.
CostSpec builtin_cost(CostKind kind, const CostParams& params = {});

/// Linear cost f(x) = slope * x (piecewise_linear with a single slope).
CostSpec linear_cost(double slope);

/*!
 * Mollified cost f^(eps).
 *
 * The derivative averages f'_+ over the square [-eps, 0]^2, i.e.
 * f^(eps)'(x) = E[f'_+(x - S)] with S the sum of two independent U(0, eps);
 * values are anchored by f^(eps)(anchor) = f(anchor). Builtin (piecewise
 * polynomial) costs are integrated exactly; custom costs by adaptive
 * Gauss-Kronrod quadrature.
 */
CostSpec mollify(const CostSpec& cost, double epsilon, double anchor = 0.0);

struct ProblemSpec {
  ProblemSpec(CostSpec cost, double control_cost, double discount);

  CostSpec cost;
  double C;
  double q;

  /// f'_+(-inf) < -C q < f'_+(+inf).
  bool admissible() const;
  std::string describe() const;
};

/// Outcome of the grid checks of convexity, finite-difference consistency and growth.
struct CostCheck {
  bool convex = true;
  bool fd_consistent = true;
  bool growth_ok = true;
  double worst_fd_violation = 0.0;
  bool ok() const { return convex && fd_consistent && growth_ok; }
};

CostCheck check_cost(const CostSpec& cost, const std::vector<double>& grid);

}  // namespace levyctl
