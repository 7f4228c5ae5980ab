#include "levyctl/barrier_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "levyctl/errors.hpp"
#include "levyctl/parallel.hpp"
#include "levyctl/path_functionals.hpp"

namespace levyctl {
namespace {

// Steps simulated per refill when a path is consumed as a stream.
constexpr std::size_t kBlock = 2048;

}  // namespace

void OccupationMeasure::add(double level, double weight) {
  const auto k = static_cast<std::size_t>(level * inv_width_);
  if (k >= bins_.size()) bins_.resize(std::max(k + 1, bins_.size() + bins_.size() / 2));
  bins_[k].weight += weight;
  bins_[k].moment += weight * level;
}

void OccupationMeasure::merge(const OccupationMeasure& other) {
  if (other.bins_.size() > bins_.size()) bins_.resize(other.bins_.size());
  for (std::size_t k = 0; k < other.bins_.size(); ++k) {
    bins_[k].weight += other.bins_[k].weight;
    bins_[k].moment += other.bins_[k].moment;
  }
}

double OccupationMeasure::integrate_derivative(const CostSpec& cost, double b) const {
  double acc = 0.0;
  for (const auto& bin : bins_)
    if (bin.weight > 0.0) acc += bin.weight * cost.derivative_plus(bin.moment / bin.weight + b);
  return acc;
}

double OccupationMeasure::mass() const {
  double s = 0.0;
  for (const auto& bin : bins_) s += bin.weight;
  return s;
}

double OccupationMeasure::first_moment() const {
  double s = 0.0;
  for (const auto& bin : bins_) s += bin.moment;
  return s;
}

OccupationMeasure build_occupation_measure(const LevyTriplet& triplet, double q,
                                           const SimConfig& cfg, double bin_width,
                                           std::size_t chunk_paths) {
  if (!(bin_width > 0.0)) throw ValidationError("occupation bin width must be positive");
  PathGenerator gen(triplet, cfg);
  const std::size_t n = gen.steps();
  const auto discount = discount_factors(q, cfg.dt, n);
  const std::size_t total = gen.deterministic() ? 1 : cfg.n_paths;
  const double path_weight = cfg.dt / static_cast<double>(total);

  auto simulate_into = [&](std::uint64_t path, OccupationMeasure& m) {
    auto s = gen.stream(path);
    std::array<double, kBlock> block;
    double x = 0.0;
    double running_min = 0.0;
    for (std::size_t start = 0; start < n; start += kBlock) {
      const std::size_t len = std::min(kBlock, n - start);
      s.fill(std::span<double>(block.data(), len));
      for (std::size_t j = 0; j < len; ++j) {
        m.add(x - running_min, discount[start + j] * path_weight);
        x = block[j];
        running_min = std::min(running_min, x);
      }
    }
  };

  OccupationMeasure result(bin_width);
  chunk_paths = std::max<std::size_t>(chunk_paths, 1);
  const std::size_t chunks = (total + chunk_paths - 1) / chunk_paths;
  const unsigned workers = resolve_workers(cfg.workers);
  // Chunks are merged strictly in index order, whatever the worker count.
  for (std::size_t first = 0; first < chunks; first += workers) {
    const std::size_t wave = std::min<std::size_t>(workers, chunks - first);
    std::vector<OccupationMeasure> partial(wave, OccupationMeasure(bin_width));
    parallel_for(wave, workers, [&](std::size_t w) {
      const std::size_t c = first + w;
      const std::size_t begin = c * chunk_paths;
      const std::size_t end = std::min(total, begin + chunk_paths);
      for (std::size_t p = begin; p < end; ++p) simulate_into(p, partial[w]);
    });
    for (const auto& m : partial) result.merge(m);
  }
  return result;
}

namespace {

double default_tol(double b) { return 1e-3 * (1.0 + std::abs(b)); }

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

BarrierResult solve_barrier(const LevyTriplet& triplet, const ProblemSpec& problem,
                            const SimConfig& cfg, const SolverSettings& settings) {
  if (!problem.admissible())
    throw AssumptionViolated("cost slopes do not satisfy f'_+(-inf) < -Cq < f'_+(inf)");
  if (triplet.is_driftless_cp())
    throw AssumptionViolated("driftless compound Poisson model: use the perturbed solver");
  cfg.validate_for(problem);

  const auto measure = build_occupation_measure(triplet, problem.q, cfg, settings.occupation_bin,
                                                settings.chunk_paths);
  auto g = [&](double b) { return measure.integrate_derivative(problem.cost, b) + problem.C; };

  BarrierResult out;
  double lo;
  double hi;
  if (g(0.0) >= 0.0) {
    hi = 0.0;
    double step = 1.0;
    lo = -step;
    while (g(lo) >= 0.0) {
      hi = lo;
      step *= 2.0;
      if (step > settings.expansion_limit)
        throw NoSignChange("rho + C stays nonnegative down to b = " + num(-step));
      lo = -step;
    }
  } else {
    lo = 0.0;
    double step = 1.0;
    hi = step;
    while (g(hi) < 0.0) {
      lo = hi;
      step *= 2.0;
      if (step > settings.expansion_limit)
        throw NoSignChange("rho + C stays negative up to b = " + num(step));
      hi = step;
    }
  }

  auto tol_at = [&](double b) {
    return settings.bisect_tol > 0.0 ? settings.bisect_tol : default_tol(b);
  };
  int iterations = 0;
  while (hi - lo > tol_at(0.5 * (lo + hi))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
    ++iterations;
  }
  out.b_star = 0.5 * (lo + hi);
  out.bracket = {lo, hi};
  out.iterations = iterations;
  out.bisect_tol = tol_at(out.b_star);
  out.occupation_mean = measure.first_moment();
  out.discount_mass = measure.mass();

  // Exact per-path pass for the statistical error at the root, streamed so
  // that no path is ever stored.
  const double delta = 10.0 * out.bisect_tol;
  const double probes[] = {out.b_star - delta, out.b_star, out.b_star + delta};
  PathGenerator gen(triplet, cfg);
  const std::size_t n = gen.steps();
  const auto discount = discount_factors(problem.q, cfg.dt, n);
  SampleMatrix samples(cfg.n_paths, 3);
  auto exact_row = [&](std::size_t p) {
    auto s = gen.stream(p);
    std::array<double, kBlock> block;
    double acc[3] = {0.0, 0.0, 0.0};
    double x = 0.0;
    double running_min = 0.0;
    for (std::size_t start = 0; start < n; start += kBlock) {
      const std::size_t len = std::min(kBlock, n - start);
      s.fill(std::span<double>(block.data(), len));
      for (std::size_t j = 0; j < len; ++j) {
        const double u = x - running_min;
        for (int k = 0; k < 3; ++k)
          acc[k] += discount[start + j] * problem.cost.derivative_plus(u + probes[k]);
        x = block[j];
        running_min = std::min(running_min, x);
      }
    }
    auto row = samples.row(p);
    for (int k = 0; k < 3; ++k) row[k] = acc[k] * cfg.dt;
  };
  if (gen.deterministic()) {
    exact_row(0);
    for (std::size_t p = 1; p < cfg.n_paths; ++p)
      std::copy(samples.row(0).begin(), samples.row(0).end(), samples.row(p).begin());
  } else {
    const unsigned workers = resolve_workers(cfg.workers);
    const std::size_t blocks = std::min<std::size_t>(workers, cfg.n_paths);
    parallel_for(blocks, workers, [&](std::size_t w) {
      for (std::size_t p = cfg.n_paths * w / blocks; p < cfg.n_paths * (w + 1) / blocks; ++p)
        exact_row(p);
    });
  }
  const bool anti = gen.antithetic_active();
  const auto below = summarize(samples.column(0), anti);
  out.rho_at_b_star = summarize(samples.column(1), anti);
  const auto above = summarize(samples.column(2), anti);
  out.slope = (above.mean - below.mean) / (2.0 * delta);
  if (out.slope < 1e-12) {
    out.flat_slope = true;
    out.ci_halfwidth = std::numeric_limits<double>::infinity();
  } else {
    out.ci_halfwidth = out.rho_at_b_star.std_error / out.slope;
  }
  const std::string canonical = triplet.describe() + "|" + problem.describe() + "|" +
                                cfg.describe() + "|solve";
  out.fingerprint = fingerprint_of(canonical);
  out.rho_at_b_star.fingerprint = fingerprint_of(canonical + ":rho_at_b_star");
  return out;
}

PerturbedResult solve_barrier_perturbed(const LevyTriplet& triplet, const ProblemSpec& problem,
                                        const SimConfig& cfg, std::vector<double> eps_grid,
                                        const SolverSettings& settings) {
  if (!classify(triplet).driftless_compound_poisson)
    throw AssumptionViolated("perturbed solver needs a driftless compound Poisson model");
  if (eps_grid.empty()) throw ValidationError("perturb.eps_grid must not be empty");
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    if (!(eps_grid[k] > 0.0)) throw ValidationError("perturb.eps_grid entries must be positive");
    if (k > 0 && !(eps_grid[k] < eps_grid[k - 1]))
      throw ValidationError("perturb.eps_grid must be strictly decreasing");
  }
  PerturbedResult out;
  for (double eps : eps_grid) {
    // Same seeds for every eps: the paths X_t - eps t are coupled pathwise.
    out.sequence.emplace_back(eps, solve_barrier(triplet.with_added_drift(-eps), problem, cfg,
                                                 settings));
  }
  out.b_star = out.sequence.back().second.b_star;
  for (std::size_t k = 0; k + 1 < out.sequence.size(); ++k) {
    const auto& larger = out.sequence[k].second;
    const auto& smaller = out.sequence[k + 1].second;
    const double allowance = 3.0 * std::hypot(larger.ci_halfwidth, smaller.ci_halfwidth) +
                             larger.bisect_tol + smaller.bisect_tol;
    if (smaller.b_star > larger.b_star + allowance) out.monotone = false;
  }
  return out;
}

EstimateWithError BarrierSweep::difference(std::size_t i, std::size_t j) const {
  const std::pair<std::size_t, double> w[] = {{j, 1.0}, {i, -1.0}};
  return summarize_combination(samples, w, 0.0, antithetic);
}

std::size_t BarrierSweep::argmin() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k].mean < values[best].mean) best = k;
  return best;
}

BarrierSweep barrier_sweep(const LevyTriplet& triplet, const ProblemSpec& problem, double x,
                           std::span<const double> b_grid, const SimConfig& cfg) {
  for (std::size_t k = 0; k + 1 < b_grid.size(); ++k)
    if (!(b_grid[k] < b_grid[k + 1]))
      throw ValidationError("sweep.b_grid must be strictly increasing");
  cfg.validate_for(problem);
  PathGenerator gen(triplet, cfg);
  const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
  BarrierSweep out{std::vector<double>(b_grid.begin(), b_grid.end()), {},
                   SampleMatrix(cfg.n_paths, b_grid.size()), gen.antithetic_active()};
  for_each_path(gen, out.samples,
                [&](std::size_t, std::span<const double> x0, std::span<double> row) {
                  for (std::size_t k = 0; k < b_grid.size(); ++k) {
                    const auto f =
                        barrier_functionals(x0, x, b_grid[k], problem.cost, discount, cfg.dt);
                    row[k] = f.running + problem.C * f.control;
                  }
                });
  const std::string base = triplet.describe() + "|" + problem.describe() + "|" + cfg.describe();
  for (std::size_t k = 0; k < b_grid.size(); ++k) {
    auto est = summarize(out.samples.column(k), out.antithetic);
    est.fingerprint = fingerprint_of(base + "|sweep:x=" + num(x) + ":b=" + num(b_grid[k]));
    out.values.push_back(std::move(est));
  }
  return out;
}

}  // namespace levyctl
