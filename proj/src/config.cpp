#include "levyctl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "levyctl/errors.hpp"

namespace levyctl {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads the fields of one object and remembers which keys were consumed so
// that leftovers can be reported as unknown.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? required_number(key) : fallback;
  }

  double required_number(const std::string& key) {
    if (!has(key)) throw ConfigError(join(path_, key), "required field is missing");
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(join(path_, key), "must be finite");
    return d;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key) || j_.at(key).is_null()) {
      if (has(key)) seen_.insert(key);
      return std::nullopt;
    }
    return required_number(key);
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError(join(path_, key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(join(path_, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
        throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "expected a finite number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(join(path_, key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string())
        throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  Block child(const std::string& key) {
    if (!has(key)) throw ConfigError(join(path_, key), "required block is missing");
    return Block(raw(key), join(path_, key));
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Re-labels library validation errors with the config path that caused them.
template <class Fn>
auto at_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
}

JumpSpec parse_jumps(Block b) {
  const double rate = b.number("rate", 0.0);
  if (rate < 0.0) throw ConfigError(b.path("rate"), "must be >= 0");
  if (rate == 0.0) {
    if (b.has("dist")) b.raw("dist");
    b.finish();
    return JumpSpec::none();
  }
  Block d = b.child("dist");
  const std::string kind = d.text("kind", "");
  JumpDistribution dist;
  if (kind == "kou") {
    dist = KouJumps{d.required_number("p_up"), d.required_number("eta_up"),
                    d.required_number("eta_down")};
  } else if (kind == "gaussian") {
    dist = GaussianJumps{d.required_number("mean"), d.required_number("stddev")};
  } else if (kind == "uniform") {
    dist = UniformJumps{d.required_number("lo"), d.required_number("hi")};
  } else if (kind == "discrete") {
    if (!d.has("atoms")) throw ConfigError(d.path("atoms"), "required field is missing");
    const auto& atoms = d.raw("atoms");
    if (!atoms.is_array()) throw ConfigError(d.path("atoms"), "expected an array of [value, probability]");
    DiscreteJumps dj;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& a = atoms[i];
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        throw ConfigError(d.path("atoms") + "[" + std::to_string(i) + "]",
                          "expected [value, probability]");
      dj.atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
    }
    dist = dj;
  } else {
    throw ConfigError(d.path("kind"), "expected one of kou, gaussian, uniform, discrete");
  }
  d.finish();
  b.finish();
  return at_path(b.path("dist"), [&] { return JumpSpec(rate, dist); });
}

SimConfig parse_sim(Block b, double q) {
  SimConfig s;
  s.dt = b.number("dt", s.dt);
  s.horizon = b.number("horizon", horizon_for(q));
  s.n_paths = b.count("n_paths", s.n_paths);
  s.master_seed = b.count("seed", s.master_seed);
  s.antithetic = b.flag("antithetic", s.antithetic);
  b.finish();
  if (!(s.dt > 0.0)) throw ConfigError(b.path("dt"), "must be positive");
  if (!(s.horizon > 0.0)) throw ConfigError(b.path("horizon"), "must be positive");
  if (s.dt > s.horizon) throw ConfigError(b.path("dt"), "must not exceed sim.horizon");
  if (s.n_paths == 0) throw ConfigError(b.path("n_paths"), "must be positive");
  if (s.antithetic && s.n_paths % 2 != 0)
    throw ConfigError(b.path("n_paths"), "must be even with antithetic sampling");
  if (std::exp(-q * s.horizon) > 1e-4 * (1.0 + 1e-9))
    throw ConfigError(b.path("horizon"), "exp(-q T) must not exceed 1e-4");
  return s;
}

void require_increasing(const std::vector<double>& v, const std::string& path, bool strict = true) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (strict ? !(v[i] > v[i - 1]) : !(v[i] >= v[i - 1]))
      throw ConfigError(path, "must be strictly increasing");
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError(key, "empty path component in override");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError(key, "override descends into a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError(key, "override descends into a non-object");
  (*node)[parts.back()] = value;
}

LevyTriplet parse_model(const json& block, const std::string& path) {
  Block b(block, path);
  if (b.has("gamma") && b.has("drift"))
    throw ConfigError(b.path("drift"), "give either gamma or drift, not both");
  const bool effective = b.has("drift");
  const double level = effective ? b.required_number("drift") : b.number("gamma", 0.0);
  const double sigma = b.number("sigma", 0.0);
  if (sigma < 0.0) throw ConfigError(b.path("sigma"), "must be >= 0");
  const double theta = b.number("theta_bar", 1.0);
  if (!(theta > 0.0)) throw ConfigError(b.path("theta_bar"), "must be positive");
  JumpSpec jumps = b.has("jumps") ? parse_jumps(b.child("jumps")) : JumpSpec::none();
  b.finish();
  auto triplet = at_path(path, [&] {
    return effective ? LevyTriplet::from_effective_drift(level, sigma, jumps, theta)
                     : LevyTriplet(level, sigma, jumps, theta);
  });
  if (!exp_moment_check(triplet))
    throw ConfigError(b.path("theta_bar"), "jump law has no exponential moment of this order");
  if (sigma == 0.0 && !jumps.has_jumps() && triplet.effective_drift() == 0.0)
    throw ConfigError(path, "model is identically zero");
  return triplet;
}

CostSpec parse_cost(const json& block, const std::string& path) {
  Block b(block, path);
  const std::string kind = b.text("kind", "");
  CostParams p;
  p.scale = b.number("scale", 1.0);
  p.center = b.number("center", 0.0);
  CostKind k;
  if (kind == "quadratic") {
    k = CostKind::quadratic;
  } else if (kind == "quartic") {
    k = CostKind::quartic;
  } else if (kind == "abs") {
    k = CostKind::abs;
  } else if (kind == "piecewise_linear") {
    k = CostKind::piecewise_linear;
    p.slopes = b.numbers("slopes", {});
    p.kinks = b.numbers("kinks", {});
    p.value_at_zero = b.number("value_at_zero", 0.0);
  } else {
    throw ConfigError(b.path("kind"), "expected one of quadratic, abs, piecewise_linear, quartic");
  }
  const auto eps = b.optional_number("mollify_eps");
  b.finish();
  auto cost = at_path(path, [&] { return builtin_cost(k, p); });
  if (eps) {
    if (!(*eps > 0.0)) throw ConfigError(b.path("mollify_eps"), "must be positive");
    cost = mollify(cost, *eps);
  }
  return cost;
}

RunConfig parse_run_config(const json& doc) {
  Block root(doc, "");
  if (!root.has("model")) throw ConfigError("model", "required block is missing");
  auto model = parse_model(root.raw("model"), "model");

  Block pb = root.child("problem");
  if (!pb.has("cost")) throw ConfigError("problem.cost", "required block is missing");
  auto cost = parse_cost(pb.raw("cost"), "problem.cost");
  const double C = pb.number("C", 0.0);
  const double q = pb.required_number("q");
  if (!(q > 0.0)) throw ConfigError("problem.q", "must be positive");
  pb.finish();

  ProblemSpec problem(cost, C, q);
  const json empty = json::object();
  SimConfig sim = parse_sim(root.has("sim") ? root.child("sim") : Block(empty, "sim"), q);

  RunConfig rc{model, problem, sim, {}, {}, {}, {}, {}, {}, doc};

  if (root.has("solve")) {
    Block b = root.child("solve");
    rc.solve.bisect_tol = b.number("bisect_tol", 0.0);
    rc.solve.occupation_bin = b.number("occupation_bin", rc.solve.occupation_bin);
    b.finish();
    if (rc.solve.bisect_tol < 0.0) throw ConfigError("solve.bisect_tol", "must be >= 0");
    if (!(rc.solve.occupation_bin > 0.0)) throw ConfigError("solve.occupation_bin", "must be positive");
  }
  if (root.has("sweep")) {
    Block b = root.child("sweep");
    rc.sweep.x = b.number("x", 0.0);
    rc.sweep.b_grid = b.numbers("b_grid", {});
    b.finish();
    require_increasing(rc.sweep.b_grid, "sweep.b_grid");
  }
  if (root.has("value")) {
    Block b = root.child("value");
    rc.value.x = b.number("x", 0.0);
    rc.value.b = b.number("b", 0.0);
    b.finish();
  }
  if (root.has("rho")) {
    Block b = root.child("rho");
    rc.rho.b_grid = b.numbers("b_grid", {});
    rc.rho.method = b.text("method", rc.rho.method);
    b.finish();
    require_increasing(rc.rho.b_grid, "rho.b_grid");
    if (rc.rho.method != "time_integral" && rc.rho.method != "exp_clock")
      throw ConfigError("rho.method", "expected time_integral or exp_clock");
  }
  if (root.has("verify")) {
    Block b = root.child("verify");
    rc.verify.checks = b.strings("checks", rc.verify.checks);
    rc.verify.b = b.optional_number("b");
    rc.verify.x = b.optional_number("x");
    if (b.has("x_grid")) rc.verify.x_grid = b.numbers("x_grid", {});
    rc.verify.t_grid = b.numbers("t_grid", rc.verify.t_grid);
    rc.verify.h = b.number("h", rc.verify.h);
    rc.verify.fd_h = b.number("fd_h", rc.verify.fd_h);
    b.finish();
    static const std::set<std::string> known{"barrier_derivative", "slope_identity", "convexity",
                                             "martingale", "hjb"};
    for (std::size_t i = 0; i < rc.verify.checks.size(); ++i)
      if (!known.count(rc.verify.checks[i]))
        throw ConfigError("verify.checks[" + std::to_string(i) + "]", "unknown check");
    if (!(rc.verify.h > 0.0)) throw ConfigError("verify.h", "must be positive");
    if (!(rc.verify.fd_h > 0.0)) throw ConfigError("verify.fd_h", "must be positive");
    if (rc.verify.x_grid) require_increasing(*rc.verify.x_grid, "verify.x_grid");
    require_increasing(rc.verify.t_grid, "verify.t_grid");
    for (double t : rc.verify.t_grid)
      if (t < 0.0 || t > rc.sim.horizon) throw ConfigError("verify.t_grid", "entries must lie in [0, sim.horizon]");
  }
  if (root.has("perturb")) {
    Block b = root.child("perturb");
    rc.perturb.eps_grid = b.numbers("eps_grid", rc.perturb.eps_grid);
    b.finish();
    if (rc.perturb.eps_grid.empty()) throw ConfigError("perturb.eps_grid", "must not be empty");
    for (std::size_t i = 0; i < rc.perturb.eps_grid.size(); ++i) {
      if (!(rc.perturb.eps_grid[i] > 0.0))
        throw ConfigError("perturb.eps_grid[" + std::to_string(i) + "]", "must be positive");
      if (i > 0 && !(rc.perturb.eps_grid[i] < rc.perturb.eps_grid[i - 1]))
        throw ConfigError("perturb.eps_grid", "must be strictly decreasing");
    }
  }
  root.finish();
  return rc;
}

}  // namespace levyctl
