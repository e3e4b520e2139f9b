#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bsc/adaptive.hpp"
#include "bsc/experiments.hpp"
#include "bsc/fe_problem.hpp"
#include "bsc/krylov.hpp"
#include "bsc/problems.hpp"

namespace bsc::cli {

std::optional<Experiment> parse_experiment(const std::string& name) {
  if (name == "atan-demo") return Experiment::atan_demo;
  if (name == "carrier") return Experiment::carrier;
  if (name == "minsurf1d") return Experiment::minsurf1d;
  if (name == "carrier-adaptive") return Experiment::carrier_adaptive;
  return std::nullopt;
}

std::string to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::atan_demo:
      return "atan-demo";
    case Experiment::carrier:
      return "carrier";
    case Experiment::minsurf1d:
      return "minsurf1d";
    case Experiment::carrier_adaptive:
      return "carrier-adaptive";
  }
  return "?";
}

ConfigError::ConfigError(std::string field, const std::string& what)
    : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

ExperimentConfig defaults_for(Experiment experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case Experiment::atan_demo:
      c.H = 0.8;
      c.residual_tol = 1e-15;
      break;
    case Experiment::carrier:
      c.h_rel = 0.05;
      c.hl_factor = 0.05;
      c.max_iterations = 200;
      break;
    case Experiment::minsurf1d:
      c.cells = 8;
      c.H = 3.0;
      c.kappa = 1e-10;
      c.residual_tol = 1e-12;
      break;
    case Experiment::carrier_adaptive:
      c.eps = 1e-2;
      c.cells = 32;
      c.h_rel = 0.1;
      c.hl_factor = 0.05;
      c.kappa = 1e-3;
      c.max_iterations = 200;
      break;
  }
  return c;
}

namespace {

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) {
    throw ConfigError(field, what);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  require(std::isfinite(u0), "u0", "must be finite");
  require(eps > 0.0 && std::isfinite(eps), "eps", "must be positive");
  require(n_dof >= 1, "n-dof", "must be >= 1");
  require(cells >= 1, "cells", "must be >= 1");
  require(p >= 1 && p <= 8, "p", "must lie in [1, 8]");
  require(std::isfinite(left) && std::isfinite(right), "left/right", "must be finite");
  require(H.has_value() != h_rel.has_value(), "H", "exactly one of H and h-rel must be set");
  if (H) require(*H > 0.0, "H", "must be positive");
  if (h_rel) require(*h_rel > 0.0 && std::isfinite(*h_rel), "h-rel", "must be positive");
  require(hl_factor > 0.0 && hl_factor < 1.0, "hl-factor", "must lie in (0, 1)");
  require(hu_factor > 1.0 && std::isfinite(hu_factor), "hu-factor", "must be > 1");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda", "must lie in [0, 1]");
  require(t0 > 0.0 && t0 <= 1.0, "t0", "must lie in (0, 1]");
  require(residual_tol > 0.0, "residual-tol", "must be positive");
  if (increment_tol) require(*increment_tol > 0.0, "increment-tol", "must be positive");
  require(max_iterations >= 1, "max-iterations", "must be >= 1");
  require(kappa > 0.0 && kappa < 1.0, "kappa", "must lie in (0, 1)");
  require(kappa_target > 0.0 && kappa_target < 1.0, "kappa-target", "must lie in (0, 1)");
  require(max_cells >= cells, "max-cells", "must be >= cells");
  require(phase1_tol > 0.0, "phase1-tol", "must be positive");
  for (double h : sweep_h_rel) {
    require(h > 0.0 && std::isfinite(h), "sweep", "h-rel values must be positive");
  }
  if (experiment == Experiment::carrier_adaptive || experiment == Experiment::minsurf1d) {
    require(cells * static_cast<std::size_t>(p) >= 2, "cells", "need at least one interior node");
  }
}

io::ConfigEcho ExperimentConfig::echo() const {
  io::ConfigEcho e;
  auto num = [&e](const char* k, double v) { e.emplace_back(k, v); };
  auto integer = [&e](const char* k, long long v) { e.emplace_back(k, v); };
  switch (experiment) {
    case Experiment::atan_demo:
      num("u0", u0);
      break;
    case Experiment::carrier:
      num("eps", eps);
      integer("n-dof", static_cast<long long>(n_dof));
      break;
    case Experiment::minsurf1d:
      integer("cells", static_cast<long long>(cells));
      integer("p", p);
      num("left", left);
      num("right", right);
      break;
    case Experiment::carrier_adaptive:
      num("eps", eps);
      integer("cells", static_cast<long long>(cells));
      integer("p", p);
      num("kappa-target", kappa_target);
      integer("max-cells", static_cast<long long>(max_cells));
      e.emplace_back("frozen-mesh", frozen_mesh);
      num("phase1-tol", phase1_tol);
      e.emplace_back("kappa-riesz", std::string(kappa_direct ? "direct" : "cg"));
      break;
  }
  if (H) num("H", *H);
  if (h_rel) num("h-rel", *h_rel);
  num("hl-factor", hl_factor);
  num("hu-factor", hu_factor);
  num("lambda", lambda);
  num("t0", t0);
  num("residual-tol", residual_tol);
  if (increment_tol) num("increment-tol", *increment_tol);
  integer("max-iterations", max_iterations);
  if (experiment != Experiment::atan_demo) num("kappa", kappa);
  integer("seed", static_cast<long long>(seed));
  return e;
}

namespace {

template <class T>
T get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(key, "wrong type " + std::string(v.type_name()));
  }
}

}  // namespace

std::vector<double> parse_sweep(const std::string& spec) {
  const std::string prefix = "h-rel=";
  if (spec.rfind(prefix, 0) != 0) {
    throw ConfigError("sweep", "expected h-rel=v1,v2,...");
  }
  std::vector<double> values;
  std::stringstream ss(spec.substr(prefix.size()));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) {
        throw std::invalid_argument(item);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("sweep", "not a number: '" + item + "'");
    }
  }
  if (values.empty()) {
    throw ConfigError("sweep", "no values");
  }
  return values;
}

std::optional<std::string> experiment_in_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("experiment")) {
    return std::nullopt;
  }
  return get_as<std::string>(doc["experiment"], "experiment");
}

void apply_json(ExperimentConfig& c, const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config", "top level must be an object");
  }
  for (const auto& [raw_key, v] : doc.items()) {
    std::string key = raw_key;
    for (char& ch : key) {
      if (ch == '_') ch = '-';
    }
    if (key == "experiment") {
      const auto exp = parse_experiment(get_as<std::string>(v, key));
      if (!exp || *exp != c.experiment) {
        throw ConfigError(key, "does not match the selected experiment");
      }
    } else if (key == "u0") {
      c.u0 = get_as<double>(v, key);
    } else if (key == "eps") {
      c.eps = get_as<double>(v, key);
    } else if (key == "n-dof") {
      c.n_dof = get_as<std::size_t>(v, key);
    } else if (key == "cells") {
      c.cells = get_as<std::size_t>(v, key);
    } else if (key == "p") {
      c.p = get_as<int>(v, key);
    } else if (key == "left") {
      c.left = get_as<double>(v, key);
    } else if (key == "right") {
      c.right = get_as<double>(v, key);
    } else if (key == "H") {
      c.H = get_as<double>(v, key);
      c.h_rel.reset();
    } else if (key == "h-rel") {
      c.h_rel = get_as<double>(v, key);
      c.H.reset();
    } else if (key == "hl-factor") {
      c.hl_factor = get_as<double>(v, key);
    } else if (key == "hu-factor") {
      c.hu_factor = get_as<double>(v, key);
    } else if (key == "lambda") {
      c.lambda = get_as<double>(v, key);
    } else if (key == "t0") {
      c.t0 = get_as<double>(v, key);
    } else if (key == "residual-tol") {
      c.residual_tol = get_as<double>(v, key);
    } else if (key == "increment-tol") {
      c.increment_tol = get_as<double>(v, key);
    } else if (key == "max-iterations") {
      c.max_iterations = get_as<int>(v, key);
    } else if (key == "kappa") {
      c.kappa = get_as<double>(v, key);
    } else if (key == "kappa-target") {
      c.kappa_target = get_as<double>(v, key);
    } else if (key == "max-cells") {
      c.max_cells = get_as<std::size_t>(v, key);
    } else if (key == "frozen-mesh") {
      c.frozen_mesh = get_as<bool>(v, key);
    } else if (key == "phase1-tol") {
      c.phase1_tol = get_as<double>(v, key);
    } else if (key == "kappa-riesz") {
      const auto m = get_as<std::string>(v, key);
      if (m != "cg" && m != "direct") {
        throw ConfigError(key, "must be cg or direct");
      }
      c.kappa_direct = m == "direct";
    } else if (key == "format") {
      const auto f = get_as<std::string>(v, key);
      if (f == "csv") {
        c.format = OutputFormat::csv;
      } else if (f == "json") {
        c.format = OutputFormat::json;
      } else {
        throw ConfigError(key, "must be csv or json");
      }
    } else if (key == "output") {
      c.output = get_as<std::string>(v, key);
    } else if (key == "pretty") {
      c.pretty = get_as<bool>(v, key);
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, key);
    } else if (key == "sweep") {
      c.sweep_h_rel = parse_sweep(get_as<std::string>(v, key));
    } else {
      throw ConfigError(raw_key, "unknown key");
    }
  }
}

namespace {

BscConfig bsc_config(const ExperimentConfig& c) {
  BscConfig b;
  if (c.H) b.H = *c.H;
  b.h_rel = c.h_rel;
  b.h_lo_factor = c.hl_factor;
  b.h_hi_factor = c.hu_factor;
  b.smoothing_weight = c.lambda;
  b.t0 = c.t0;
  b.residual_tol = c.residual_tol;
  b.increment_tol = c.increment_tol;
  b.max_iterations = c.max_iterations;
  return b;
}

bool succeeded(SolveStatus s) { return s == SolveStatus::converged || s == SolveStatus::saturated; }

ExperimentResult run_atan(const ExperimentConfig& c) {
  problems::ArctanProblem problem;
  const auto u0 = problem.space()->make_state({c.u0});
  SolveOutcome out = solve(problem, u0, bsc_config(c));
  io::RunReport report{to_string(c.experiment), c.echo(), out, {}, std::nullopt};
  report.summary.emplace_back("u_final", out.final_state[0]);
  return {std::move(report), succeeded(out.status)};
}

ExperimentResult run_carrier(const ExperimentConfig& c) {
  auto base = std::make_shared<problems::CarrierProblem>(c.eps, c.n_dof);
  krylov::KrylovConfig kc;
  kc.kappa = c.kappa;
  krylov::KrylovNewtonProblem problem(base, kc, krylov::Method::gmres);
  SolveOutcome out = solve(problem, base->space()->zero(), bsc_config(c));
  io::RunReport report{to_string(c.experiment), c.echo(), out, {}, std::nullopt};
  const auto& u = out.final_state;
  double center = 0.0;
  if (c.n_dof % 2 == 1) {
    center = u[c.n_dof / 2];
  } else {
    center = 0.5 * (u[c.n_dof / 2 - 1] + u[c.n_dof / 2]);
  }
  double sup = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sup = std::max(sup, std::abs(u[i]));
  }
  report.summary.emplace_back("u_at_0", center);
  report.summary.emplace_back("u_max_abs", sup);
  return {std::move(report), succeeded(out.status)};
}

ExperimentResult run_minsurf(const ExperimentConfig& c) {
  auto space = FeSpace::make(Mesh1D::uniform(0.0, 1.0, c.cells), c.p);
  auto problem = std::make_shared<problems::FeProblem>(
      space, std::make_shared<problems::MinSurfForm>(), c.left, c.right);
  auto provider = adaptive::increment_provider(problem, c.kappa);
  SolveOutcome out = solve(*provider, space->zero(), bsc_config(c));
  io::RunReport report{to_string(c.experiment), c.echo(), out, {}, std::nullopt};
  const auto full = problem->full_values(out.final_state);
  double err = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double x = space->node_coordinate(i);
    err = std::max(err, std::abs(full[i] - (c.left + (c.right - c.left) * x)));
  }
  report.summary.emplace_back("chord_error_max", err);
  return {std::move(report), succeeded(out.status)};
}

ExperimentResult run_carrier_adaptive(const ExperimentConfig& c) {
  auto space = FeSpace::make(Mesh1D::uniform(-1.0, 1.0, c.cells), c.p);
  auto problem = std::make_shared<problems::FeProblem>(
      space, std::make_shared<problems::CarrierForm>(c.eps), 0.0, 0.0);
  adaptive::AdaptiveConfig ac;
  ac.bsc = bsc_config(c);
  ac.policy.kappa_target = c.kappa_target;
  ac.policy.mark_exponent = c.p;
  ac.policy.max_cells = c.max_cells;
  ac.increment_kappa = c.kappa;
  ac.continue_on_saturation = c.frozen_mesh;
  ac.phase1_increment_tol = c.phase1_tol;
  ac.kappa.mode = c.kappa_direct ? adaptive::RieszSolve::direct : adaptive::RieszSolve::jacobi_cg;
  auto res = adaptive::adaptive_solve(problem, space->zero(), ac);
  io::RunReport report{to_string(c.experiment), c.echo(), res.outcome, {}, res.history};
  const auto& fs = *res.final_problem->fe_space();
  report.summary.emplace_back("phase1_iterations", static_cast<long long>(res.phase1_iterations));
  report.summary.emplace_back("final_cells", static_cast<long long>(fs.mesh().n_cells()));
  report.summary.emplace_back("final_dofs", static_cast<long long>(fs.dim()));
  return {std::move(report), succeeded(res.outcome.status)};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  switch (config.experiment) {
    case Experiment::atan_demo:
      return run_atan(config);
    case Experiment::carrier:
      return run_carrier(config);
    case Experiment::minsurf1d:
      return run_minsurf(config);
    case Experiment::carrier_adaptive:
      return run_carrier_adaptive(config);
  }
  throw ConfigError("experiment", "unknown");
}

}  // namespace bsc::cli
