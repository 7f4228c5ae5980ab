#include "levyctl/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "levyctl/barrier_solver.hpp"
#include "levyctl/errors.hpp"
#include "levyctl/estimators.hpp"
#include "levyctl/path_functionals.hpp"

namespace levyctl {

void CheckReport::add(CheckPoint p) {
  const double ratio = [&] {
    const double excess = p.sense == "lower" ? std::max(0.0, -p.residual) : std::abs(p.residual);
    if (p.tolerance > 0.0) return excess / p.tolerance;
    return excess > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }();
  double worst = -1.0;
  for (const auto& d : details) {
    const double e = d.sense == "lower" ? std::max(0.0, -d.residual) : std::abs(d.residual);
    const double r = d.tolerance > 0.0 ? e / d.tolerance
                                       : (e > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    worst = std::max(worst, r);
  }
  if (details.empty() || ratio > worst) {
    statistic = p.residual;
    tolerance = p.tolerance;
  }
  passed = passed && p.passed;
  details.push_back(std::move(p));
}

namespace {

using Weights = std::vector<std::pair<std::size_t, double>>;

/// Linear functional sum_k w_k V(., k) + constant of per-path value samples.
struct Functional {
  Weights w;
  double constant = 0.0;

  void add(std::size_t k, double weight) { w.emplace_back(k, weight); }
  double apply(std::span<const double> means) const {
    double s = constant;
    for (const auto& [k, c] : w) s += c * means[k];
    return s;
  }
  Functional scaled_minus(const Functional& other, double scale) const {
    Functional out = *this;
    for (const auto& [k, c] : other.w) out.w.emplace_back(k, -scale * c);
    out.constant -= scale * other.constant;
    return out;
  }
};

CheckPoint make_point(double x, double residual, double tolerance, const std::string& sense,
                      const std::string& table = "main") {
  CheckPoint p;
  p.x = x;
  p.residual = residual;
  p.tolerance = tolerance;
  p.sense = sense;
  p.table = table;
  p.passed = sense == "lower" ? residual >= -tolerance : std::abs(residual) <= tolerance;
  return p;
}

/// Per-path v_b(x_k) + C control for every x in `xs`.
SampleMatrix value_samples(const PathGenerator& gen, const ProblemSpec& problem, double b,
                           std::span<const double> xs) {
  const auto& cfg = gen.config();
  const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
  SampleMatrix out(cfg.n_paths, xs.size());
  for_each_path(gen, out, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto f = barrier_functionals(x0, xs[k], b, problem.cost, discount, cfg.dt);
      row[k] = f.running + problem.C * f.control;
    }
  });
  return out;
}

std::vector<double> column_means(const SampleMatrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c);
  for (double& v : out) v /= static_cast<double>(m.rows());
  return out;
}

double resolve_b_star(const LevyTriplet& triplet, const ProblemSpec& problem, const SimConfig& cfg,
                      std::optional<double> b_star) {
  if (b_star) return *b_star;
  if (triplet.is_driftless_cp()) return solve_barrier_perturbed(triplet, problem, cfg).b_star;
  return solve_barrier(triplet, problem, cfg).b_star;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

/// Sorted grid with near-duplicates removed and exact lookups by value.
class Grid {
 public:
  explicit Grid(std::vector<double> pts) : pts_(std::move(pts)) {
    std::sort(pts_.begin(), pts_.end());
    std::vector<double> u;
    for (double p : pts_)
      if (u.empty() || p - u.back() > 1e-10 * (1.0 + std::abs(p))) u.push_back(p);
    pts_ = std::move(u);
  }

  std::size_t index(double y) const {
    auto it = std::lower_bound(pts_.begin(), pts_.end(), y - 1e-10 * (1.0 + std::abs(y)));
    if (it == pts_.end() || std::abs(*it - y) > 1e-10 * (1.0 + std::abs(y)))
      throw NumericError("grid lookup failed for " + fmt(y));
    return static_cast<std::size_t>(it - pts_.begin());
  }
  const std::vector<double>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  double operator[](std::size_t k) const { return pts_[k]; }

 private:
  std::vector<double> pts_;
};

/*!
 * E[g(x + J)] for the piecewise-linear interpolant g of grid values, as a
 * functional of those values. Below the grid g continues with `low_slope`
 * when given (exact for the value function below b*), otherwise with the slope
 * of the first segment; above the grid the last segment's slope is frozen.
 */
Functional jump_expectation(const JumpSpec& jumps, const Grid& grid, double x,
                            std::optional<double> low_slope) {
  Functional out;
  const std::size_t m = grid.size();
  const double inf = std::numeric_limits<double>::infinity();
  auto linear_piece = [&](double a, double b, std::size_t k0, std::size_t k1) {
    // g(y) = g_k0 + (g_k1 - g_k0) (y - grid[k0]) / (grid[k1] - grid[k0]) on y - x in (a, b].
    const auto pm = jumps.partial_moments(a, b);
    if (pm.mass == 0.0) return;
    const double shift = (x * pm.mass + pm.first - grid[k0] * pm.mass) / (grid[k1] - grid[k0]);
    out.add(k0, pm.mass - shift);
    out.add(k1, shift);
  };
  // Below the grid.
  {
    const auto pm = jumps.partial_moments(-inf, grid[0] - x);
    if (pm.mass > 0.0) {
      if (low_slope) {
        out.add(0, pm.mass);
        out.constant += *low_slope * (x * pm.mass + pm.first - grid[0] * pm.mass);
      } else {
        linear_piece(-inf, grid[0] - x, 0, 1);
      }
    }
  }
  for (std::size_t k = 0; k + 1 < m; ++k) linear_piece(grid[k] - x, grid[k + 1] - x, k, k + 1);
  linear_piece(grid[m - 1] - x, inf, m - 2, m - 1);
  return out;
}

/// max over interior nodes of |curvature| * (adjacent spacing)^2 / 8.
double interpolation_bound(const Grid& grid, std::span<const double> values) {
  double bound = 0.0;
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    const double hl = grid[k] - grid[k - 1];
    const double hr = grid[k + 1] - grid[k];
    const double curv =
        2.0 * std::abs((values[k + 1] - values[k]) / hr - (values[k] - values[k - 1]) / hl) /
        (hl + hr);
    bound = std::max(bound, curv * std::max(hl, hr) * std::max(hl, hr) / 8.0);
  }
  return bound;
}

}  // namespace

CheckReport check_barrier_derivative(const LevyTriplet& triplet, const ProblemSpec& problem,
                                     double x, double b, const SimConfig& cfg, double h) {
  if (!(h > 0.0)) throw ValidationError("verify.h must be positive");
  if (x == b) throw ValidationError("check_barrier_derivative needs x != b");
  cfg.validate_for(problem);
  PathGenerator gen(triplet, cfg);
  const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
  // Columns: v_b, v_{b+h}, v_{b+2h}, e^{-q tau_b}, rho path sample at b.
  SampleMatrix s(cfg.n_paths, 5);
  for_each_path(gen, s, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
    for (int j = 0; j < 3; ++j) {
      const auto f = barrier_functionals(x0, x, b + j * h, problem.cost, discount, cfg.dt);
      row[j] = f.running + problem.C * f.control;
      if (j == 0) row[3] = f.tau == kNever ? 0.0 : discount[f.tau];
    }
    row[4] = rho_functional(x0, b, problem.cost, discount, cfg.dt);
  });
  const bool anti = gen.antithetic_active();
  const auto means = column_means(s);
  const double a = means[3];
  const double bb = means[4] + problem.C;
  const Weights wstat = {{1, 1.0 / h}, {0, -1.0 / h}, {3, -bb}, {4, -a}};
  const auto stat = summarize_combination(s, wstat, a * bb - a * problem.C, anti);
  const Weights wd2 = {{2, 1.0 / (h * h)}, {1, -2.0 / (h * h)}, {0, 1.0 / (h * h)}};
  const auto d2 = summarize_combination(s, wd2, 0.0, anti);

  CheckReport r;
  r.name = "barrier_derivative";
  const double tol =
      3.0 * stat.std_error + 0.5 * h * (std::abs(d2.mean) + 3.0 * d2.std_error);
  r.add(make_point(x, stat.mean, tol, "two_sided"));
  r.notes.push_back("finite_difference=" + fmt((means[1] - means[0]) / h) +
                    " passage_discount=" + fmt(a) + " rho_plus_C=" + fmt(bb));
  return r;
}

CheckReport check_slope_identity(const LevyTriplet& triplet, const ProblemSpec& problem, double x,
                                 double b, const SimConfig& cfg, double h) {
  if (!(h > 0.0)) throw ValidationError("verify.h must be positive");
  cfg.validate_for(problem);
  PathGenerator gen(triplet, cfg);
  const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
  const double xs[] = {x - 2 * h, x - h, x, x + h, x + 2 * h};
  // Columns 0..4: v_b at xs; 5: passage integral of f'_+; 6: e^{-q tau}.
  SampleMatrix s(cfg.n_paths, 7);
  for_each_path(gen, s, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
    for (int j = 0; j < 5; ++j) {
      const auto f = barrier_functionals(x0, xs[j], b, problem.cost, discount, cfg.dt);
      row[j] = f.running + problem.C * f.control;
    }
    const auto p = passage_functionals(x0, x, b, problem.cost, discount, cfg.dt);
    row[5] = p.integral;
    row[6] = p.discount_tau;
  });
  const bool anti = gen.antithetic_active();
  const Weights w1 = {{3, 0.5 / h}, {1, -0.5 / h}, {5, -1.0}, {6, problem.C}};
  const Weights w2 = {{4, 0.25 / h}, {0, -0.25 / h}, {5, -1.0}, {6, problem.C}};
  const auto stat = summarize_combination(s, w1, 0.0, anti);
  const auto coarse = summarize_combination(s, w2, 0.0, anti);
  const double means_fd = std::abs(stat.mean - coarse.mean) / 3.0;

  CheckReport r;
  r.name = "slope_identity";
  // Below b every path satisfies the identity up to rounding.
  const double ulp_slack = 1e-12 * (1.0 + std::abs(problem.C));
  r.add(make_point(x, stat.mean, 3.0 * stat.std_error + means_fd + ulp_slack, "two_sided"));
  const auto rhs_int = summarize(s.column(5), anti);
  const auto rhs_disc = summarize(s.column(6), anti);
  r.notes.push_back("rhs=" + fmt(rhs_int.mean - problem.C * rhs_disc.mean));
  return r;
}

CheckReport check_convexity(const LevyTriplet& triplet, const ProblemSpec& problem,
                            const SimConfig& cfg, std::span<const double> x_grid,
                            std::optional<double> b_star) {
  if (!problem.admissible())
    throw AssumptionViolated("convexity check needs an admissible problem");
  if (x_grid.size() < 5) throw ValidationError("verify.x_grid needs at least 5 points");
  const double step = x_grid[1] - x_grid[0];
  if (!(step > 0.0)) throw ValidationError("verify.x_grid must be increasing");
  for (std::size_t k = 1; k < x_grid.size(); ++k)
    if (std::abs((x_grid[k] - x_grid[k - 1]) - step) > 1e-9 * (1.0 + std::abs(step)))
      throw ValidationError("verify.x_grid must be uniformly spaced");
  cfg.validate_for(problem);
  const double b = resolve_b_star(triplet, problem, cfg, b_star);
  PathGenerator gen(triplet, cfg);
  const auto s = value_samples(gen, problem, b, x_grid);
  const auto means = column_means(s);
  CheckReport r;
  r.name = "convexity";
  for (std::size_t k = 1; k + 1 < x_grid.size(); ++k) {
    const Weights w = {{k - 1, 1.0}, {k, -2.0}, {k + 1, 1.0}};
    const auto d2 = summarize_combination(s, w, 0.0, gen.antithetic_active());
    const double slack = 1e-9 * (1.0 + std::abs(means[k]));
    r.add(make_point(x_grid[k], d2.mean, 3.0 * d2.std_error + slack, "lower"));
  }
  r.notes.push_back("b_star=" + fmt(b));
  return r;
}

CheckReport check_martingale(const LevyTriplet& triplet, const ProblemSpec& problem,
                             const SimConfig& cfg, double x, std::span<const double> t_grid,
                             std::optional<double> b_star, const MartingaleSettings& settings) {
  cfg.validate_for(problem);
  const double b = resolve_b_star(triplet, problem, cfg, b_star);
  if (!(x > b)) throw ValidationError("check_martingale needs x > b*");
  if (!(settings.grid_step > 0.0)) throw ValidationError("martingale grid step must be positive");

  PathGenerator gen(triplet, cfg);
  const std::size_t n = gen.steps();
  std::vector<std::size_t> t_idx;
  for (double t : t_grid) {
    if (!(t >= 0.0)) throw ValidationError("verify.t_grid entries must be nonnegative");
    const auto i = static_cast<std::size_t>(std::llround(t / cfg.dt));
    if (i > n) throw ValidationError("verify.t_grid exceeds sim.horizon");
    t_idx.push_back(i);
  }
  const auto discount = discount_factors(problem.q, cfg.dt, n);

  // Per path and time: running cost, discount at tau ^ t, level X_{tau ^ t}.
  const std::size_t nt = t_idx.size();
  SampleMatrix run(cfg.n_paths, 3 * nt);
  for_each_path(gen, run, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
    std::size_t tau = kNever;
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      const double level = x + x0[i];
      if (level < b) {
        tau = i;
        break;
      }
      if (i < n) cum[i + 1] = cum[i] + discount[i] * problem.cost(level) * cfg.dt;
    }
    for (std::size_t k = 0; k < nt; ++k) {
      const std::size_t i = std::min(t_idx[k], tau);
      row[3 * k] = cum[i];
      row[3 * k + 1] = discount[i];
      row[3 * k + 2] = x + x0[i];
    }
  });

  double hi = x;
  for (std::size_t p = 0; p < run.rows(); ++p)
    for (std::size_t k = 0; k < nt; ++k) hi = std::max(hi, run(p, 3 * k + 2));
  const auto below = static_cast<std::size_t>(std::ceil((x - b) / settings.grid_step));
  const double step = (x - b) / static_cast<double>(below);
  std::vector<double> pts;
  for (std::size_t k = 0;; ++k) {
    const double g = b + static_cast<double>(k) * step;
    pts.push_back(k == below ? x : g);
    if (k >= below + 1 && g >= hi) break;
  }
  const Grid grid(pts);
  const std::size_t ix = grid.index(x);

  SimConfig icfg = cfg;
  icfg.master_seed = cfg.master_seed + settings.interpolant_seed_offset;
  PathGenerator igen(triplet, icfg);
  const auto vs = value_samples(igen, problem, b, grid.points());
  const auto vbar = column_means(vs);
  const double interp_bound = interpolation_bound(grid, vbar);

  CheckReport r;
  r.name = "martingale";
  for (std::size_t k = 0; k < nt; ++k) {
    // Functional of the interpolant values, averaged over the martingale batch.
    std::vector<double> wk(grid.size(), 0.0);
    double constant = 0.0;
    std::vector<double> m_path(run.rows());
    const auto& g = grid.points();
    for (std::size_t p = 0; p < run.rows(); ++p) {
      const double running = run(p, 3 * k);
      const double disc = run(p, 3 * k + 1);
      const double y = run(p, 3 * k + 2);
      double v;
      if (y < b) {
        wk[0] += disc;
        constant += disc * problem.C * (b - y);
        v = problem.C * (b - y) + vbar[0];
      } else {
        auto it = std::upper_bound(g.begin(), g.end(), y);
        std::size_t j = it == g.end() ? g.size() - 1 : static_cast<std::size_t>(it - g.begin());
        j = std::max<std::size_t>(j, 1);
        const double lam = (y - g[j - 1]) / (g[j] - g[j - 1]);
        wk[j - 1] += disc * (1.0 - lam);
        wk[j] += disc * lam;
        v = (1.0 - lam) * vbar[j - 1] + lam * vbar[j];
      }
      constant += running;
      m_path[p] = running + disc * v;
    }
    const double inv = 1.0 / static_cast<double>(run.rows());
    Weights w;
    for (std::size_t j = 0; j < wk.size(); ++j)
      if (wk[j] != 0.0) w.emplace_back(j, wk[j] * inv);
    w.emplace_back(ix, -1.0);
    const auto interp_part = summarize_combination(vs, w, 0.0, igen.antithetic_active());
    const auto path_part = summarize(m_path, gen.antithetic_active());
    const double stat = interp_part.mean + constant * inv;
    const double se = std::hypot(interp_part.std_error, path_part.std_error);
    r.add(make_point(static_cast<double>(t_idx[k]) * cfg.dt, stat, 3.0 * se + interp_bound,
                     "two_sided"));
  }
  r.notes.push_back("b_star=" + fmt(b) + " v_x=" + fmt(vbar[ix]) +
                    " interpolation_bound=" + fmt(interp_bound));
  return r;
}

CheckReport check_hjb(const LevyTriplet& triplet, const ProblemSpec& problem, const SimConfig& cfg,
                      std::span<const double> x_grid, double fd_h, std::optional<double> b_star) {
  if (!(fd_h > 0.0)) throw ValidationError("verify.fd_h must be positive");
  if (x_grid.empty()) throw ValidationError("verify.x_grid must not be empty");
  cfg.validate_for(problem);
  const double b = resolve_b_star(triplet, problem, cfg, b_star);
  const auto& jumps = triplet.jumps();
  const double d = triplet.effective_drift();
  const double s2 = triplet.sigma() * triplet.sigma();
  const double rate = jumps.rate();

  std::vector<double> pts{b};
  double lo = x_grid[0];
  double hi = x_grid[0];
  for (double x : x_grid) {
    for (int j = -2; j <= 2; ++j) pts.push_back(x + j * fd_h);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (jumps.has_jumps()) {
    const double pad = jumps.abs_quantile(0.999);
    const double from = std::min(lo - 2 * fd_h - pad, b);
    const double to = hi + 2 * fd_h + pad;
    const double step = std::max(fd_h, (to - from) / 200.0);
    for (double y = from; y <= to + 0.5 * step; y += step) pts.push_back(y);
  }
  const Grid grid(pts);
  PathGenerator gen(triplet, cfg);
  const auto vs = value_samples(gen, problem, b, grid.points());
  const auto vbar = column_means(vs);
  const bool anti = gen.antithetic_active();

  std::vector<double> fvals(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) fvals[k] = problem.cost(grid[k]);
  const double quad_bound =
      jumps.has_jumps()
          ? rate * std::max(interpolation_bound(grid, vbar), 0.0)
          : 0.0;

  auto generator = [&](double x, double s, const Functional& jump_part) {
    Functional g;
    g.add(grid.index(x + s), d / (2 * s) + 0.5 * s2 / (s * s));
    g.add(grid.index(x - s), -d / (2 * s) + 0.5 * s2 / (s * s));
    g.add(grid.index(x), -s2 / (s * s) - problem.q - rate);
    for (const auto& [k, w] : jump_part.w) g.add(k, rate * w);
    g.constant = rate * jump_part.constant + problem.cost(x);
    return g;
  };

  CheckReport r;
  r.name = "hjb";
  for (double x : x_grid) {
    const auto jv = jumps.has_jumps() ? jump_expectation(jumps, grid, x, -problem.C) : Functional{};
    const auto g1 = generator(x, fd_h, jv);
    const auto g2 = generator(x, 2 * fd_h, jv);
    const auto res = summarize_combination(vs, g1.w, g1.constant, anti);
    const auto res2 = summarize_combination(vs, g2.w, g2.constant, anti);

    // (L - q) f(x), for the time-step allowance.
    double f_second = problem.cost.second_derivative(x);
    if (!std::isfinite(f_second))
      f_second = (problem.cost(x + fd_h) - 2 * problem.cost(x) + problem.cost(x - fd_h)) /
                 (fd_h * fd_h);
    double lf = d * problem.cost.derivative_plus(x) + 0.5 * s2 * f_second - problem.q * problem.cost(x);
    if (jumps.has_jumps()) {
      const auto jf = jump_expectation(jumps, grid, x, std::nullopt);
      lf += rate * (jf.apply(fvals) - problem.cost(x));
    }
    const double tol = 3.0 * res.std_error + std::abs(res.mean - res2.mean) / 3.0 + quad_bound +
                       cfg.dt * std::abs(lf);
    r.add(make_point(x, res.mean, tol, x >= b ? "two_sided" : "lower"));

    Functional grad;
    grad.add(grid.index(x + fd_h), 0.5 / fd_h);
    grad.add(grid.index(x - fd_h), -0.5 / fd_h);
    grad.constant = problem.C;
    Functional grad2;
    grad2.add(grid.index(x + 2 * fd_h), 0.25 / fd_h);
    grad2.add(grid.index(x - 2 * fd_h), -0.25 / fd_h);
    grad2.constant = problem.C;
    const auto gr = summarize_combination(vs, grad.w, grad.constant, anti);
    const auto gr2 = summarize_combination(vs, grad2.w, grad2.constant, anti);
    const double gtol = 3.0 * gr.std_error + std::abs(gr.mean - gr2.mean) / 3.0 +
                        1e-9 * (1.0 + std::abs(problem.C));
    r.add(make_point(x, gr.mean, gtol, x < b ? "two_sided" : "lower", "gradient"));
  }
  r.notes.push_back("b_star=" + fmt(b) + " grid_points=" + std::to_string(grid.size()) +
                    " quadrature_bound=" + fmt(quad_bound));
  return r;
}

void write_check_csv(const CheckReport& report, std::ostream& os, const std::string& table) {
  os << "x,residual,tolerance,passed\n";
  os.precision(17);
  for (const auto& p : report.details)
    if (p.table == table)
      os << p.x << "," << p.residual << "," << p.tolerance << "," << (p.passed ? "true" : "false")
         << "\n";
}

}  // namespace levyctl
