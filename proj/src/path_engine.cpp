#include "levyctl/path_engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "levyctl/errors.hpp"
#include "levyctl/parallel.hpp"

namespace levyctl {

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

void SimConfig::validate() const {
  if (!(dt > 0.0 && std::isfinite(dt))) throw InvalidModel("sim.dt must be positive");
  if (!(horizon > 0.0 && std::isfinite(horizon))) throw InvalidModel("sim.horizon must be positive");
  if (dt > horizon) throw InvalidModel("sim.dt must not exceed sim.horizon");
  if (n_paths == 0) throw InvalidModel("sim.n_paths must be positive");
  if (antithetic && n_paths % 2 != 0)
    throw InvalidModel("sim.n_paths must be even with antithetic sampling");
}

void SimConfig::validate_for(const ProblemSpec& problem, double tail_tol) const {
  validate();
  if (std::exp(-problem.q * horizon) > tail_tol * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "sim.horizon too short: exp(-q T) = " << std::exp(-problem.q * horizon) << " exceeds "
       << tail_tol << " (need T >= " << horizon_for(problem.q, tail_tol) << ")";
    throw InvalidModel(os.str());
  }
}

std::string SimConfig::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "sim(dt=" << dt << ",T=" << horizon << ",n=" << n_paths << ",seed=" << master_seed
     << ",anti=" << antithetic << ")";
  return os.str();
}

double horizon_for(double q, double tail_tol) { return std::log(1.0 / tail_tol) / q; }

PathGenerator::PathGenerator(LevyTriplet triplet, SimConfig cfg)
    : triplet_(std::move(triplet)),
      cfg_((cfg.validate(), cfg)),
      steps_(cfg.steps()),
      antithetic_(cfg.antithetic),
      drift_step_(triplet_.effective_drift() * cfg.dt),
      diffusion_step_(triplet_.sigma() * std::sqrt(cfg.dt)) {
  if (triplet_.sigma() == 0.0 && !triplet_.jumps().has_jumps() && triplet_.effective_drift() == 0.0)
    throw InvalidModel("model is identically zero (no drift, no Gaussian part, no jumps)");
  if (antithetic_ && triplet_.jumps().has_jumps() && !triplet_.jumps().symmetric()) {
    antithetic_ = false;
    warnings_.emplace_back("antithetic sampling ignored: jump law is not symmetric");
  }
}

std::uint64_t PathGenerator::stream_id(std::uint64_t path) const {
  return antithetic_ ? (path & ~std::uint64_t{1}) : path;
}

PathStream::PathStream(const PathGenerator& gen, std::uint64_t path)
    : gen_(&gen),
      rng_(gen.cfg_.master_seed, gen.stream_id(path)),
      mirror_(gen.antithetic_ && (path & 1U) != 0) {
  const auto& jumps = gen.triplet_.jumps();
  if (jumps.has_jumps()) next_jump_ = rng_.exponential(jumps.rate());
}

double PathStream::next(std::vector<JumpMark>* marks) {
  const auto& gen = *gen_;
  ++i_;
  if (gen.deterministic()) {
    x_ = gen.triplet_.effective_drift() * (static_cast<double>(i_) * gen.cfg_.dt);
    return x_;
  }
  double inc = gen.drift_step_;
  if (gen.diffusion_step_ > 0.0) {
    const double z = rng_.normal();
    inc += gen.diffusion_step_ * (mirror_ ? -z : z);
  }
  const auto& jumps = gen.triplet_.jumps();
  if (jumps.has_jumps()) {
    const double t_end = static_cast<double>(i_) * gen.cfg_.dt;
    while (next_jump_ <= t_end) {
      double j = jumps.sample(rng_);
      if (mirror_) j = -j;
      inc += j;
      if (marks != nullptr) marks->push_back({i_, j});
      next_jump_ += rng_.exponential(jumps.rate());
    }
  }
  x_ += inc;
  return x_;
}

void PathStream::fill(std::span<double> out) {
  for (double& v : out) v = next();
}

void PathGenerator::generate(std::uint64_t path, std::span<double> out,
                             std::vector<JumpMark>* marks) const {
  auto s = stream(path);
  const std::size_t n = std::min(out.size(), steps_ + 1);
  if (n == 0) return;
  out[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) out[i] = s.next(marks);
}

PathBatch simulate_batch(const LevyTriplet& triplet, double x_start, const SimConfig& cfg) {
  PathGenerator gen(triplet, cfg);
  PathBatch batch;
  const std::size_t n = gen.steps() + 1;
  batch.grid.resize(n);
  for (std::size_t i = 0; i < n; ++i) batch.grid[i] = static_cast<double>(i) * cfg.dt;
  batch.x_start = x_start;
  batch.values.assign(cfg.n_paths, std::vector<double>(n));
  batch.jump_marks.resize(cfg.n_paths);
  batch.seeds.resize(cfg.n_paths);
  parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t p) {
    auto& row = batch.values[p];
    gen.generate(p, row, &batch.jump_marks[p]);
    for (double& v : row) v += x_start;
    batch.seeds[p] = stream_key(cfg.master_seed, gen.stream_id(p));
  });
  batch.fingerprint = triplet.describe() + "|" + cfg.describe();
  return batch;
}

ReflectedPath reflect(std::span<const double> path, double b) {
  ReflectedPath out;
  out.u_values.resize(path.size());
  out.r_values.resize(path.size());
  double running_min = 0.0;  // min(0, min_{j<=i}(X_j - b))
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double gap = path[i] - b;
    if (gap < 0.0 && !out.tau_minus_index) out.tau_minus_index = i;
    running_min = std::min(running_min, gap);
    out.r_values[i] = -running_min;
    out.u_values[i] = path[i] + out.r_values[i];
  }
  return out;
}

std::vector<ReflectedPath> reflect(const PathBatch& batch, double b) {
  std::vector<ReflectedPath> out(batch.size());
  for (std::size_t p = 0; p < batch.size(); ++p) out[p] = reflect(batch.values[p], b);
  return out;
}

std::vector<double> discount_factors(double q, double dt, std::size_t n) {
  std::vector<double> d(n + 1);
  for (std::size_t i = 0; i <= n; ++i) d[i] = std::exp(-q * static_cast<double>(i) * dt);
  return d;
}

double discounted_integral(std::span<const double> values, double q, double dt) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    acc += std::exp(-q * static_cast<double>(i) * dt) * values[i];
  return acc * dt;
}

double discounted_stieltjes(std::span<const double> r_values, double q, double dt) {
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < r_values.size(); ++i) {
    const double inc = r_values[i] - prev;
    if (inc != 0.0) acc += std::exp(-q * static_cast<double>(i) * dt) * inc;
    prev = r_values[i];
  }
  return acc;
}

std::vector<double> sample_sup_at_exp_time(const LevyTriplet& triplet, const SimConfig& cfg,
                                           double q, SupSampleStats* stats) {
  if (!(q > 0.0)) throw InvalidModel("q must be positive");
  PathGenerator gen(triplet, cfg);
  std::vector<double> sup(cfg.n_paths);
  std::vector<std::uint64_t> rejected(cfg.n_paths, 0);
  parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t p) {
    StreamRng clock(cfg.master_seed, gen.stream_id(p), 1);
    double e = clock.exponential(q);
    while (e > cfg.horizon) {
      ++rejected[p];
      e = clock.exponential(q);
    }
    auto s = gen.stream(p);
    double best = 0.0;
    while (static_cast<double>(s.index() + 1) * cfg.dt <= e) best = std::max(best, s.next());
    sup[p] = best;
  });
  if (stats != nullptr) {
    stats->rejections = 0;
    for (auto r : rejected) stats->rejections += r;
    stats->rejection_rate = static_cast<double>(stats->rejections) /
                            static_cast<double>(stats->rejections + cfg.n_paths);
  }
  return sup;
}

void write_batch_csv(const PathBatch& batch, std::ostream& os) {
  os << "path,t,x\n";
  os.precision(17);
  for (std::size_t p = 0; p < batch.size(); ++p)
    for (std::size_t i = 0; i < batch.grid.size(); ++i)
      os << p << "," << batch.grid[i] << "," << batch.values[p][i] << "\n";
}

}  // namespace levyctl
