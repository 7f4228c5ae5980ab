#include "levyctl/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "levyctl/errors.hpp"
#include "levyctl/path_functionals.hpp"

namespace levyctl {
namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string canonical(const LevyTriplet& triplet, const ProblemSpec& problem,
                      const SimConfig& cfg, const std::string& kind) {
  return triplet.describe() + "|" + problem.describe() + "|" + cfg.describe() + "|" + kind;
}

}  // namespace

std::vector<double> SampleMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  return out;
}

EstimateWithError summarize(std::span<const double> samples, bool antithetic_pairs) {
  EstimateWithError e;
  e.n = samples.size();
  if (samples.empty()) return e;
  for (double s : samples)
    if (!std::isfinite(s)) throw NonFiniteSample("non-finite sample in Monte Carlo estimator");

  std::vector<double> units;
  if (antithetic_pairs && samples.size() % 2 == 0) {
    units.reserve(samples.size() / 2);
    for (std::size_t i = 0; i + 1 < samples.size(); i += 2)
      units.push_back(0.5 * (samples[i] + samples[i + 1]));
  } else {
    units.assign(samples.begin(), samples.end());
  }
  const auto m = static_cast<double>(units.size());
  double sum = 0.0;
  for (double u : units) sum += u;
  e.mean = sum / m;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double u : units) {
    const double d = u - e.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  if (units.size() > 1) {
    const double var = m2 / (m - 1.0);
    e.std_error = std::sqrt(var / m);
  }
  if (m2 > 0.0) {
    e.kurtosis = (m4 / m) / ((m2 / m) * (m2 / m));
    e.stderr_reliable = e.kurtosis <= kKurtosisLimit;
  }
  return e;
}

EstimateWithError summarize_combination(const SampleMatrix& samples,
                                        std::span<const std::pair<std::size_t, double>> weights,
                                        double constant, bool antithetic_pairs) {
  std::vector<double> combined(samples.rows(), constant);
  for (std::size_t r = 0; r < samples.rows(); ++r)
    for (const auto& [col, w] : weights) combined[r] += w * samples(r, col);
  return summarize(combined, antithetic_pairs);
}

std::string fingerprint_of(const std::string& canonical_text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EstimateWithError estimate_rho(const LevyTriplet& triplet, const ProblemSpec& problem, double b,
                               const SimConfig& cfg, RhoMethod method) {
  cfg.validate_for(problem);
  PathGenerator gen(triplet, cfg);
  EstimateWithError est;
  if (method == RhoMethod::time_integral) {
    const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
    SampleMatrix samples(cfg.n_paths, 1);
    for_each_path(gen, samples, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
      row[0] = rho_functional(x0, b, problem.cost, discount, cfg.dt);
    });
    est = summarize(samples.column(0), gen.antithetic_active());
    est.fingerprint = fingerprint_of(canonical(triplet, problem, cfg, "rho:time_integral:b=" + num(b)));
  } else {
    const auto sup = sample_sup_at_exp_time(triplet, cfg, problem.q);
    std::vector<double> samples(sup.size());
    for (std::size_t p = 0; p < sup.size(); ++p)
      samples[p] = problem.cost.derivative_plus(sup[p] + b) / problem.q;
    est = summarize(samples, gen.antithetic_active());
    est.fingerprint = fingerprint_of(canonical(triplet, problem, cfg, "rho:exp_clock:b=" + num(b)));
  }
  return est;
}

EstimateWithError estimate_rho_started_at_barrier(const LevyTriplet& triplet,
                                                  const ProblemSpec& problem, double b,
                                                  const SimConfig& cfg) {
  cfg.validate_for(problem);
  PathGenerator gen(triplet, cfg);
  const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
  SampleMatrix samples(cfg.n_paths, 1);
  for_each_path(gen, samples, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
    row[0] = rho_functional_from_barrier(x0, b, problem.cost, discount, cfg.dt);
  });
  auto est = summarize(samples.column(0), gen.antithetic_active());
  est.fingerprint = fingerprint_of(canonical(triplet, problem, cfg, "rho:from_barrier:b=" + num(b)));
  return est;
}

ValueEstimate estimate_value(const LevyTriplet& triplet, const ProblemSpec& problem, double b,
                             double x, const SimConfig& cfg, const PathBatch* crn_batch) {
  cfg.validate_for(problem);
  SampleMatrix samples(crn_batch != nullptr ? crn_batch->size() : cfg.n_paths, 2);
  bool antithetic = false;
  if (crn_batch != nullptr) {
    const double dt = crn_batch->dt();
    const auto discount = discount_factors(problem.q, dt, crn_batch->grid.size() - 1);
    std::vector<double> x0(crn_batch->grid.size());
    for (std::size_t p = 0; p < crn_batch->size(); ++p) {
      const auto& row_in = crn_batch->values[p];
      for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = row_in[i] - crn_batch->x_start;
      const auto f = barrier_functionals(x0, x, b, problem.cost, discount, dt);
      samples.row(p)[0] = f.running;
      samples.row(p)[1] = f.control;
    }
  } else {
    PathGenerator gen(triplet, cfg);
    antithetic = gen.antithetic_active();
    const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
    for_each_path(gen, samples, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
      const auto f = barrier_functionals(x0, x, b, problem.cost, discount, cfg.dt);
      row[0] = f.running;
      row[1] = f.control;
    });
  }
  ValueEstimate out;
  const std::pair<std::size_t, double> w1[] = {{0, 1.0}};
  const std::pair<std::size_t, double> w2[] = {{1, 1.0}};
  const std::pair<std::size_t, double> wv[] = {{0, 1.0}, {1, problem.C}};
  out.v1 = summarize_combination(samples, w1, 0.0, antithetic);
  out.v2 = summarize_combination(samples, w2, 0.0, antithetic);
  out.v = summarize_combination(samples, wv, 0.0, antithetic);
  const std::string base = canonical(triplet, problem, cfg, "value:b=" + num(b) + ":x=" + num(x) +
                                                              (crn_batch ? ":crn" : ""));
  out.v1.fingerprint = fingerprint_of(base + ":v1");
  out.v2.fingerprint = fingerprint_of(base + ":v2");
  out.v.fingerprint = fingerprint_of(base + ":v");
  return out;
}

std::vector<std::pair<double, EstimateWithError>> estimate_rho_curve(
    const LevyTriplet& triplet, const ProblemSpec& problem, std::span<const double> b_grid,
    const SimConfig& cfg) {
  for (std::size_t k = 0; k + 1 < b_grid.size(); ++k)
    if (!(b_grid[k] < b_grid[k + 1]))
      throw ValidationError("rho curve barrier grid must be strictly increasing");
  cfg.validate_for(problem);
  PathGenerator gen(triplet, cfg);
  const auto discount = discount_factors(problem.q, cfg.dt, gen.steps());
  SampleMatrix samples(cfg.n_paths, b_grid.size());
  for_each_path(gen, samples, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
    rho_functional_curve(x0, b_grid, problem.cost, discount, cfg.dt, row);
  });
  std::vector<std::pair<double, EstimateWithError>> out;
  out.reserve(b_grid.size());
  for (std::size_t k = 0; k < b_grid.size(); ++k) {
    auto est = summarize(samples.column(k), gen.antithetic_active());
    est.fingerprint =
        fingerprint_of(canonical(triplet, problem, cfg, "rho_curve:b=" + num(b_grid[k])));
    out.emplace_back(b_grid[k], std::move(est));
  }
  return out;
}

}  // namespace levyctl
