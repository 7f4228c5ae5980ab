// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and run
// sizes are fixed here; change them only together with the notes in README.md.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "levyctl/barrier_solver.hpp"
#include "levyctl/estimators.hpp"
#include "levyctl/oracles.hpp"
#include "levyctl/path_functionals.hpp"
#include "levyctl/runner.hpp"
#include "levyctl/verification.hpp"

using namespace levyctl;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SimConfig sim(double dt, std::uint64_t n, double q, std::uint64_t seed, double tail = 1e-4) {
  SimConfig c;
  c.dt = dt;
  c.n_paths = n;
  c.horizon = horizon_for(q, tail);
  c.master_seed = seed;
  return c;
}

ProblemSpec quadratic(double C, double q) {
  return ProblemSpec(builtin_cost(CostKind::quadratic), C, q);
}

LevyTriplet pure_drift() { return LevyTriplet::from_effective_drift(1.0, 0.0, JumpSpec::none()); }
LevyTriplet brownian() { return LevyTriplet(0.0, 1.0, JumpSpec::none()); }
LevyTriplet kou() { return LevyTriplet(0.0, 0.5, JumpSpec(1.0, KouJumps{0.5, 3.0, 3.0})); }
LevyTriplet symmetric_cp() {
  return LevyTriplet::from_effective_drift(0.0, 0.0,
                                           JumpSpec(1.0, DiscreteJumps{{{-1.0, 0.5}, {1.0, 0.5}}}));
}
LevyTriplet down_cp() {
  return LevyTriplet::from_effective_drift(0.0, 0.0, JumpSpec(1.0, KouJumps{0.0, 1.0, 2.0}));
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto problem = quadratic(1.0, 0.1);
  // The x^2 running cost along a drifting path makes the discounted tail
  // e^{-qT} E[f(X_T)] large, so the horizon goes to a 1e-6 tail.
  const auto cfg = sim(1e-3, 100000, 0.1, 20240101, 1e-6);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = solve_barrier(pure_drift(), problem, cfg);
  const double elapsed = seconds_since(t0);
  const double oracle = quadratic_bstar_closed_form(pure_drift(), problem);
  const double tol = std::max(1e-2, 3.0 * r.ci_halfwidth);
  const double err = std::abs(r.b_star - oracle);
  o.detail << "b*=" << r.b_star << " oracle=" << oracle << " |err|=" << err << " tol=" << tol
           << " runtime=" << elapsed << "s";
  o.require(err <= tol, "b* outside tolerance");
  o.require(elapsed <= 120.0, "runtime above 2 min");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto problem = quadratic(1.0, 0.5);
  auto cfg = sim(1e-4, 20000, 0.5, 20240102);
  cfg.antithetic = true;
  SolverSettings settings;
  settings.bisect_tol = 1e-4;
  const auto r = solve_barrier(brownian(), problem, cfg, settings);
  const double oracle = quadratic_bstar_closed_form(brownian(), problem);
  const double tol = std::max(1e-2, 3.0 * r.ci_halfwidth);
  const double err = std::abs(r.b_star - oracle);
  o.detail << "b*=" << r.b_star << " oracle=" << oracle << " |err|=" << err << " tol=" << tol;
  o.require(err <= tol, "b* outside tolerance");

  const double b = -1.25;
  const auto ti = estimate_rho(brownian(), problem, b, cfg, RhoMethod::time_integral);
  const auto ec = estimate_rho(brownian(), problem, b, cfg, RhoMethod::exp_clock);
  const double combined = std::hypot(ti.std_error, ec.std_error);
  o.detail << "; rho(-1.25): time_integral=" << ti.mean << "+-" << ti.std_error
           << " exp_clock=" << ec.mean << "+-" << ec.std_error;
  o.require(std::abs(ti.mean - ec.mean) <= 3.0 * combined, "rho methods disagree");
  o.require(std::abs(ti.mean + problem.C) <= 3.0 * ti.std_error, "time_integral rho + C not ~0");
  o.require(std::abs(ec.mean + problem.C) <= 3.0 * ec.std_error, "exp_clock rho + C not ~0");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto model = kou();
  const ProblemSpec problem = quadratic(0.5, 0.5);
  const auto cfg = sim(1e-2, 10000, 0.5, 20240103);
  const auto r = solve_barrier(model, problem, cfg);
  const double b = r.b_star;
  o.detail << "b*=" << b;

  // (a) exact monotonicity of the CRN rho curve.
  std::vector<double> grid;
  for (int k = -20; k <= 20; ++k) grid.push_back(b + 0.1 * k);
  const auto curve = estimate_rho_curve(model, problem, grid, cfg);
  bool monotone = true;
  for (std::size_t k = 1; k < curve.size(); ++k)
    monotone = monotone && curve[k].second.mean >= curve[k - 1].second.mean;
  o.detail << "; (a) rho curve monotone=" << monotone;
  o.require(monotone, "(a) rho curve not monotone");

  // (b) the sweep minimum sits at the barrier nearest b*.
  std::vector<double> bs;
  for (int k = -10; k <= 10; ++k) bs.push_back(b + 0.1 * k);
  const double x = b + 0.5;
  const auto sweep = barrier_sweep(model, problem, x, bs, cfg);
  const std::size_t nearest = 10;
  const auto gap = sweep.difference(sweep.argmin(), nearest);
  o.detail << "; (b) argmin b=" << bs[sweep.argmin()] << " gap=" << gap.mean << "+-" << gap.std_error;
  o.require(gap.mean <= 3.0 * gap.std_error, "(b) sweep minimum away from b*");

  // (c) root certificate.
  const auto d = check_barrier_derivative(model, problem, x, b, cfg, 0.05);
  o.detail << "; (c) stat=" << d.statistic << " tol=" << d.tolerance;
  o.require(d.passed, "(c) barrier derivative check");

  // (d) slope -C below the barrier.
  const auto s = check_slope_identity(model, problem, b - 1.0, b, cfg, 0.05);
  double worst = 0.0;
  for (const auto& p : s.details) worst = std::max(worst, std::abs(p.residual));
  o.detail << "; (d) max |slope + C|=" << worst;
  o.require(s.passed, "(d) slope identity");
  o.require(worst <= 1e-9, "(d) structural slope below b*");
  return o;
}

Outcome criterion4() {
  Outcome o;
  struct Case {
    std::string name;
    LevyTriplet model;
    ProblemSpec problem;
    SimConfig cfg;
  };
  std::vector<Case> cases{
      {"pure_drift", pure_drift(), quadratic(1.0, 0.1), sim(1e-3, 1, 0.1, 41)},
      {"brownian", brownian(), quadratic(1.0, 0.5), sim(1e-2, 4000, 0.5, 42)},
      {"kou", kou(), quadratic(0.5, 0.5), sim(1e-2, 4000, 0.5, 43)},
      {"symmetric_cp", symmetric_cp(), quadratic(0.0, 0.5), sim(1e-2, 4000, 0.5, 44)},
      {"down_cp", down_cp(), quadratic(1.0, 0.5), sim(1e-2, 4000, 0.5, 45)},
  };
  for (auto& c : cases) {
    const double b = c.name == "pure_drift" ? -10.05 : -1.0;
    const auto at_b = estimate_value(c.model, c.problem, b, b, c.cfg);
    PathGenerator gen(c.model, c.cfg);
    const auto disc = discount_factors(c.problem.q, c.cfg.dt, gen.steps());
    for (double x : {b - 1.0, b - 2.0}) {
      const auto below = estimate_value(c.model, c.problem, b, x, c.cfg);
      // Pathwise difference on the same paths gives the CRN standard error.
      SampleMatrix diff(c.cfg.n_paths, 1);
      for_each_path(gen, diff, [&](std::size_t, std::span<const double> x0, std::span<double> row) {
        const auto lo = barrier_functionals(x0, x, b, c.problem.cost, disc, c.cfg.dt);
        const auto hi = barrier_functionals(x0, b, b, c.problem.cost, disc, c.cfg.dt);
        row[0] = (lo.running + c.problem.C * lo.control) -
                 (c.problem.C * (b - x) + hi.running + c.problem.C * hi.control);
      });
      const auto pathwise = summarize(diff.column(0));
      const double identity = below.v.mean - (c.problem.C * (b - x) + at_b.v.mean);
      // 3 stderr of the pathwise difference, plus rounding of sums of ~1e5 terms.
      const double tol = 3.0 * pathwise.std_error + 1e-9 * (1.0 + std::abs(at_b.v.mean));
      o.require(std::abs(identity) <= tol && std::abs(pathwise.mean) <= tol,
                c.name + " x=b-" + std::to_string(static_cast<int>(b - x)));
      o.detail << c.name << "(x=b-" << static_cast<int>(b - x) << "): " << identity << " ";
    }
  }
  return o;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

Outcome criterion5() {
  Outcome o;
  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.horizon = 5.0;
  cfg.n_paths = 10000;
  cfg.master_seed = 20240105;
  SimConfig other = cfg;
  other.master_seed = 20240106;
  const auto reflected_batch = simulate_batch(kou(), 0.0, cfg);
  const auto sup_batch = simulate_batch(kou(), 0.0, other);
  std::vector<double> u_end;
  std::vector<double> sup;
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    u_end.push_back(reflect(reflected_batch.values[p], 0.0).u_values.back());
    const auto& path = sup_batch.values[p];
    sup.push_back(*std::max_element(path.begin(), path.end()));
  }
  const double d = ks_statistic(u_end, sup);
  const double n = static_cast<double>(cfg.n_paths);
  // Asymptotic 1% critical value c(0.01) = 1.628.
  const double critical = 1.628 * std::sqrt((n + n) / (n * n));
  o.detail << "KS=" << d << " critical(1%)=" << critical;
  o.require(d < critical, "KS statistic above the 1% critical value");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto f = builtin_cost(CostKind::abs);
  const auto m = mollify(f, 0.2);
  const double d0 = m.derivative_plus(0.0);
  const double d1 = m.derivative_plus(0.2);
  const double d2 = m.derivative_plus(0.4);
  o.detail << "f'(0)=" << d0 << " f'(eps)=" << d1 << " f'(2eps)=" << d2;
  o.require(std::abs(d0 + 1.0) <= 1e-12 && std::abs(d1) <= 1e-12 && std::abs(d2 - 1.0) <= 1e-12,
            "exact mollifier values");

  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  std::vector<double> xs;
  for (int i = 0; i < 20; ++i) xs.push_back(-1.0 + 2.0 * i / 19.0);
  bool monotone = true;
  for (double x : xs) {
    double prev = -1e300;
    for (double e : eps) {
      const double v = mollify(f, e).derivative_plus(x);
      monotone = monotone && v >= prev && v <= f.derivative_minus(x);
      prev = v;
    }
  }
  o.detail << "; derivative monotone in eps=" << monotone;
  o.require(monotone, "mollified derivative not monotone");

  const ProblemSpec plain(f, 1.0, 0.5);
  const auto cfg = sim(1e-2, 10000, 0.5, 20240107);
  const auto base = solve_barrier(brownian(), plain, cfg);
  o.detail << "; b*=" << base.b_star << " ci=" << base.ci_halfwidth << " b*(eps):";
  double prev = 1e300;
  BarrierResult last;
  for (double e : eps) {
    const ProblemSpec p(mollify(f, e), 1.0, 0.5);
    last = solve_barrier(brownian(), p, cfg);
    o.detail << " " << last.b_star;
    // Pathwise ordering of the derivatives makes the sequence exact up to bisection.
    o.require(last.b_star <= prev + last.bisect_tol, "b*(eps) increased as eps decreased");
    prev = last.b_star;
  }
  const double gap = std::abs(last.b_star - base.b_star);
  o.detail << " |b*(0.05) - b*|=" << gap << " 3ci=" << 3.0 * last.ci_halfwidth;
  o.require(gap <= 3.0 * last.ci_halfwidth, "b*(0.05) not within 3 ci of b*");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto problem = quadratic(0.0, 0.5);
  const auto cp = solve_barrier_perturbed(symmetric_cp(), problem, sim(1e-2, 10000, 0.5, 20240108));
  o.detail << "symmetric CP b*[-eps]:";
  for (const auto& [eps, r] : cp.sequence) o.detail << " " << eps << "->" << r.b_star;
  o.require(cp.monotone, "perturbed sequence not monotone");

  // The reflected process of a nonincreasing path is constant, so b* = -qC/2.
  for (double C : {0.0, 1.0}) {
    const auto p = quadratic(C, 0.5);
    const auto r = solve_barrier_perturbed(down_cp(), p, sim(1e-3, 100, 0.5, 20240109));
    const double exact = -0.5 * C / 2.0;
    o.detail << "; down CP C=" << C << " b*=" << r.b_star << " exact=" << exact;
    for (const auto& [eps, res] : r.sequence)
      o.require(std::abs(res.b_star - exact) <= res.bisect_tol, "negative subordinator b*");
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    std::string name;
    LevyTriplet model;
    ProblemSpec problem;
    SimConfig cfg;
  };
  // Same tail argument as criterion 1 for the drifting model.
  std::vector<Case> cases{{"pure_drift", pure_drift(), quadratic(1.0, 0.1), sim(1e-3, 1, 0.1, 81, 1e-6)},
                          {"brownian", brownian(), quadratic(1.0, 0.5), sim(1e-3, 4000, 0.5, 82)}};
  for (const auto& c : cases) {
    const double b = solve_barrier(c.model, c.problem, c.cfg).b_star;
    std::vector<double> grid;
    for (int k = 0; k < 15; ++k) grid.push_back(b - 1.375 + 0.25 * k);
    const auto r = check_hjb(c.model, c.problem, c.cfg, grid, 0.05, b);
    int failed = 0;
    for (const auto& p : r.details) failed += p.passed ? 0 : 1;
    o.detail << c.name << ": b*=" << b << " worst=" << r.statistic << "/" << r.tolerance
             << " failed points=" << failed << "; ";
    o.require(r.passed, c.name + " HJB");
  }
  const double elapsed = seconds_since(t0);
  o.detail << "runtime=" << elapsed << "s";
  o.require(elapsed <= 300.0, "runtime above 5 min");
  return o;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// result.json with the trailing metadata object cut off.
std::string without_metadata(const std::string& text) {
  const auto pos = text.find("\"metadata\"");
  return pos == std::string::npos ? text : text.substr(0, pos);
}

Outcome criterion9() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "levyctl_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto config = nlohmann::json::parse(R"({
    "model": {"sigma": 0.5, "jumps": {"rate": 1.0,
              "dist": {"kind": "kou", "p_up": 0.5, "eta_up": 3.0, "eta_down": 3.0}}},
    "problem": {"cost": {"kind": "quadratic"}, "C": 0.5, "q": 0.5},
    "sim": {"dt": 0.01, "n_paths": 3000, "seed": 99},
    "rho": {"b_grid": [-1.5, -1.0, -0.5]},
    "sweep": {"x": 0.0, "b_grid": [-1.5, -1.0, -0.5]},
    "verify": {"checks": ["barrier_derivative", "slope_identity", "convexity"]}
  })");
  const auto config_path = root / "config.json";
  std::ofstream(config_path) << config.dump(2);

  std::ostringstream sink;
  bool identical = true;
  int compared = 0;
  for (const std::string command : {"solve", "rho", "sweep", "verify"}) {
    std::vector<std::string> texts;
    for (unsigned workers : {1u, 4u}) {
      RunRequest req;
      req.command = command;
      req.config_path = config_path.string();
      req.out_dir = (root / (command + std::to_string(workers))).string();
      req.overrides = {"sim.seed=1234"};
      req.workers = workers;
      if (run(req, sink, sink) != 0) {
        o.require(false, command + " run failed");
        continue;
      }
      std::string all;
      for (const auto& entry : fs::directory_iterator(req.out_dir)) {
        const auto text = read_file(entry.path());
        all += entry.path().filename().string() + "\n" +
               (entry.path().filename() == "result.json" ? without_metadata(text) : text);
      }
      texts.push_back(all);
    }
    if (texts.size() == 2) {
      ++compared;
      identical = identical && texts[0] == texts[1];
    }
  }
  fs::remove_all(root);
  o.detail << compared << " commands compared across 1 and 4 workers, identical=" << identical;
  o.require(identical && compared == 4, "outputs differ between worker counts");
  return o;
}

Outcome criterion10() {
  Outcome o;
  const auto problem = quadratic(1.0, 0.5);
  const double oracle = quadratic_bstar_closed_form(brownian(), problem);
  std::vector<double> errs;
  for (double dt : {1e-2, 5e-3, 1e-3}) {
    auto cfg = sim(dt, 20000, 0.5, 20240110);
    cfg.antithetic = true;
    const auto r = solve_barrier(brownian(), problem, cfg);
    errs.push_back(r.b_star - oracle);
    o.detail << "dt=" << dt << ": b*=" << r.b_star << " (err " << r.b_star - oracle << ", ci "
             << r.ci_halfwidth << ") ";
  }
  const bool monotone =
      std::abs(errs[0]) > std::abs(errs[1]) && std::abs(errs[1]) > std::abs(errs[2]);
  const bool same_sign = (errs[0] > 0) == (errs[1] > 0) && (errs[1] > 0) == (errs[2] > 0);
  o.detail << "bias direction: " << (same_sign ? (errs[0] > 0 ? "b* above oracle" : "b* below oracle")
                                               : "mixed");
  o.require(monotone, "error not monotone in dt");
  o.require(std::abs(errs[2]) < std::abs(errs[0]), "dt=1e-3 not better than dt=1e-2");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8,
                                                       criterion9, criterion10};
  // Optional arguments select criteria by number.
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << " exception: " << e.what();
    }
    failures += o.passed ? 0 : 1;
    std::printf("criterion %2d: %s  %s (%.1f s)\n", id, o.passed ? "PASS" : "FAIL",
                o.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
