#include "levyctl/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "levyctl/barrier_solver.hpp"
#include "levyctl/config.hpp"
#include "levyctl/errors.hpp"
#include "levyctl/estimators.hpp"
#include "levyctl/verification.hpp"

namespace levyctl {

using ojson = nlohmann::ordered_json;

namespace {

// JSON has no infinity; an infinite half-width is written as null.
ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson to_json(const EstimateWithError& e) {
  return {{"mean", e.mean},
          {"stderr", e.std_error},
          {"n", e.n},
          {"kurtosis", e.kurtosis},
          {"stderr_reliable", e.stderr_reliable},
          {"fingerprint", e.fingerprint}};
}

ojson to_json(const BarrierResult& r) {
  return {{"b_star", r.b_star},
          {"bracket", {r.bracket.first, r.bracket.second}},
          {"iterations", r.iterations},
          {"ci_halfwidth", finite_or_null(r.ci_halfwidth)},
          {"slope", r.slope},
          {"flat_slope", r.flat_slope},
          {"bisect_tol", r.bisect_tol},
          {"rho_at_b_star", to_json(r.rho_at_b_star)},
          {"fingerprint", r.fingerprint}};
}

ojson to_json(const CheckReport& r) {
  ojson points = ojson::array();
  for (const auto& p : r.details)
    points.push_back({{"x", p.x},
                      {"residual", p.residual},
                      {"tolerance", p.tolerance},
                      {"passed", p.passed},
                      {"sense", p.sense},
                      {"table", p.table}});
  return {{"name", r.name},
          {"statistic", r.statistic},
          {"tolerance", r.tolerance},
          {"passed", r.passed},
          {"details", points},
          {"notes", r.notes}};
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("--out", "cannot write " + p.string());
  os.precision(17);
  return os;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

double solve_for_b(const RunConfig& rc, const SolverSettings& settings) {
  if (rc.model.is_driftless_cp())
    return solve_barrier_perturbed(rc.model, rc.problem, rc.sim, rc.perturb.eps_grid, settings).b_star;
  return solve_barrier(rc.model, rc.problem, rc.sim, settings).b_star;
}

struct Outcome {
  ojson result;
  std::string summary;
};

Outcome run_command(const std::string& command, const RunConfig& rc,
                    const std::filesystem::path& out_dir) {
  SolverSettings settings;
  settings.bisect_tol = rc.solve.bisect_tol;
  settings.occupation_bin = rc.solve.occupation_bin;
  std::ostringstream summary;
  summary.precision(8);
  Outcome o;

  if (command == "solve") {
    const auto r = solve_barrier(rc.model, rc.problem, rc.sim, settings);
    o.result = to_json(r);
    summary << "solve: b_star=" << r.b_star << " ci_halfwidth=" << r.ci_halfwidth
            << " iterations=" << r.iterations;
  } else if (command == "perturb") {
    const auto r = solve_barrier_perturbed(rc.model, rc.problem, rc.sim, rc.perturb.eps_grid, settings);
    ojson seq = ojson::array();
    for (const auto& [eps, res] : r.sequence) {
      auto j = to_json(res);
      seq.push_back({{"eps", eps}, {"result", j}});
    }
    o.result = {{"b_star", r.b_star}, {"monotone", r.monotone}, {"eps_sequence", seq}};
    summary << "perturb: b_star=" << r.b_star << " (smallest eps) monotone=" << std::boolalpha
            << r.monotone;
  } else if (command == "value") {
    const auto r = estimate_value(rc.model, rc.problem, rc.value.b, rc.value.x, rc.sim);
    o.result = {{"x", rc.value.x}, {"b", rc.value.b}, {"v", to_json(r.v)}, {"v1", to_json(r.v1)},
                {"v2", to_json(r.v2)}};
    summary << "value: v=" << r.v.mean << " stderr=" << r.v.std_error;
  } else if (command == "rho") {
    if (rc.rho.b_grid.empty()) throw ConfigError("rho.b_grid", "must not be empty");
    std::vector<std::pair<double, EstimateWithError>> curve;
    if (rc.rho.method == "time_integral") {
      curve = estimate_rho_curve(rc.model, rc.problem, rc.rho.b_grid, rc.sim);
    } else {
      for (double b : rc.rho.b_grid)
        curve.emplace_back(b, estimate_rho(rc.model, rc.problem, b, rc.sim, RhoMethod::exp_clock));
    }
    auto csv = open_out(out_dir / "rho.csv");
    csv << "b,rho_mean,rho_stderr\n";
    ojson pts = ojson::array();
    for (const auto& [b, e] : curve) {
      csv << b << "," << e.mean << "," << e.std_error << "\n";
      pts.push_back({{"b", b}, {"rho", to_json(e)}});
    }
    o.result = {{"method", rc.rho.method}, {"curve", pts}};
    summary << "rho: " << curve.size() << " barriers, method=" << rc.rho.method;
  } else if (command == "sweep") {
    if (rc.sweep.b_grid.empty()) throw ConfigError("sweep.b_grid", "must not be empty");
    const auto r = barrier_sweep(rc.model, rc.problem, rc.sweep.x, rc.sweep.b_grid, rc.sim);
    auto csv = open_out(out_dir / "sweep.csv");
    csv << "b,v_mean,v_stderr\n";
    ojson pts = ojson::array();
    for (std::size_t k = 0; k < r.b_grid.size(); ++k) {
      csv << r.b_grid[k] << "," << r.values[k].mean << "," << r.values[k].std_error << "\n";
      pts.push_back({{"b", r.b_grid[k]}, {"v", to_json(r.values[k])}});
    }
    const double best = r.b_grid[r.argmin()];
    o.result = {{"x", rc.sweep.x}, {"argmin_b", best}, {"curve", pts}};
    summary << "sweep: " << r.b_grid.size() << " barriers, minimum at b=" << best;
  } else if (command == "verify") {
    const double b = rc.verify.b ? *rc.verify.b : solve_for_b(rc, settings);
    const double x = rc.verify.x ? *rc.verify.x : b + 0.5;
    std::vector<double> grid;
    if (rc.verify.x_grid) {
      grid = *rc.verify.x_grid;
    } else {
      for (int k = 0; k < 15; ++k) grid.push_back(b - 1.375 + 0.25 * k);
    }
    ojson reports = ojson::array();
    int passed = 0;
    for (const auto& name : rc.verify.checks) {
      CheckReport rep;
      if (name == "barrier_derivative") {
        rep = check_barrier_derivative(rc.model, rc.problem, x, b, rc.sim, rc.verify.h);
      } else if (name == "slope_identity") {
        rep = check_slope_identity(rc.model, rc.problem, x, b, rc.sim, rc.verify.h);
      } else if (name == "convexity") {
        rep = check_convexity(rc.model, rc.problem, rc.sim, grid, b);
      } else if (name == "martingale") {
        rep = check_martingale(rc.model, rc.problem, rc.sim, x, rc.verify.t_grid, b);
      } else {
        rep = check_hjb(rc.model, rc.problem, rc.sim, grid, rc.verify.fd_h, b);
        auto g = open_out(out_dir / "check_hjb_gradient.csv");
        write_check_csv(rep, g, "gradient");
      }
      auto csv = open_out(out_dir / ("check_" + name + ".csv"));
      write_check_csv(rep, csv, "main");
      passed += rep.passed ? 1 : 0;
      reports.push_back(to_json(rep));
    }
    o.result = {{"b", b}, {"x", x}, {"checks", reports}};
    summary << "verify: " << passed << "/" << rc.verify.checks.size() << " checks passed at b=" << b;
  } else {
    throw ConfigError("<command>", "unknown command '" + command + "'");
  }
  o.summary = summary.str();
  return o;
}

}  // namespace

int run(const RunRequest& request, std::ostream& out, std::ostream& err) {
  try {
    auto doc = load_json_file(request.config_path);
    for (const auto& ov : request.overrides) apply_override(doc, ov);
    auto rc = parse_run_config(doc);
    rc.sim.workers = request.workers;

    std::filesystem::path dir(request.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("--out", "cannot create " + dir.string() + ": " + ec.message());

    auto outcome = run_command(request.command, rc, dir);

    ojson provenance = {{"overrides", request.overrides},
                        {"model", rc.model.describe()},
                        {"problem", rc.problem.describe()},
                        {"sim", rc.sim.describe()}};
    ojson doc_out = {{"command", request.command},
                     {"config", ojson::parse(rc.source.dump())},
                     {"provenance", provenance},
                     {"result", outcome.result}};
    doc_out["metadata"] = {{"timestamp", timestamp()},
                           {"config_path", request.config_path},
                           {"workers", request.workers}};
    auto os = open_out(dir / "result.json");
    os << doc_out.dump(2) << "\n";
    out << outcome.summary << "\n";
    return 0;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const ControlError& e) {
    err << "control error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace levyctl
