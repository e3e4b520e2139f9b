#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bsc/experiments.hpp"

namespace bsc::cli {

namespace {

constexpr const char* kExperiments = "atan-demo | carrier | minsurf1d | carrier-adaptive";

std::size_t thread_limit() {
  const char* env = std::getenv("BSC_NEWTON_THREADS");
  if (env == nullptr || *env == '\0') {
    return std::max(1u, std::thread::hardware_concurrency());
  }
  std::size_t n = 0;
  const auto [end, ec] = std::from_chars(env, env + std::strlen(env), n);
  if (ec != std::errc() || *end != '\0' || n == 0) {
    throw ConfigError("BSC_NEWTON_THREADS", "must be a positive integer");
  }
  return n;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + suffix;
  }
  return path.substr(0, dot) + suffix + path.substr(dot);
}

void write_report(std::ostream& os, const ExperimentConfig& c, const io::RunReport& report) {
  const auto schema =
      c.experiment == Experiment::atan_demo ? io::CsvSchema::trials : io::CsvSchema::iterations;
  if (c.format == OutputFormat::json) {
    io::write_json(os, report);
  } else {
    io::write_csv(os, report, schema);
  }
}

struct VariantResult {
  std::optional<ExperimentResult> result;
  std::string error;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Newton-type solver with backward step control: experiment runner", "bsc-newton"};
  std::string experiment_name;
  std::string config_path;
  app.add_option("experiment", experiment_name, kExperiments);
  app.add_option("--config", config_path, "JSON file with flag names as keys")
      ->check(CLI::ExistingFile);

  std::optional<double> u0, eps, left, right, H, h_rel, hl, hu, lambda, t0, rtol, itol, kappa,
      kappa_target;
  std::optional<std::size_t> n_dof, cells, max_cells;
  std::optional<int> p, max_iterations;
  std::optional<double> phase1_tol;
  std::optional<std::string> format, output, sweep, kappa_riesz;
  std::optional<std::uint64_t> seed;
  bool pretty = false;
  bool frozen = false;

  app.add_option("--u0", u0, "initial value (atan-demo)");
  app.add_option("--eps", eps, "Carrier epsilon");
  app.add_option("--n-dof", n_dof, "interior grid nodes (carrier)");
  app.add_option("--cells", cells, "initial cells (FE experiments)");
  app.add_option("--p", p, "polynomial degree (FE experiments)");
  app.add_option("--left", left, "boundary value at x = 0 (minsurf1d)");
  app.add_option("--right", right, "boundary value at x = 1 (minsurf1d)");
  app.add_option("--H", H, "backward step bound");
  app.add_option("--h-rel", h_rel, "H relative to ||du_0||_U");
  app.add_option("--hl-factor", hl, "Hl = factor * H");
  app.add_option("--hu-factor", hu, "Hu = factor * H");
  app.add_option("--lambda", lambda, "smoothing weight of the step prediction");
  app.add_option("--t0", t0, "first step size guess");
  app.add_option("--residual-tol", rtol, "stop when ||F(u_k)||_V <= tol");
  app.add_option("--increment-tol", itol, "stop when ||du_k||_U <= tol");
  app.add_option("--max-iterations", max_iterations, "outer iteration limit");
  app.add_option("--kappa", kappa, "relative tolerance of the inner Krylov solves");
  app.add_option("--kappa-target", kappa_target, "refine when kappa_k exceeds this");
  app.add_option("--max-cells", max_cells, "cell cap for refinement");
  app.add_flag("--frozen-mesh", frozen, "keep iterating at the cell cap");
  app.add_option("--phase1-tol", phase1_tol, "increment norm that ends the fixed-mesh phase");
  app.add_option("--kappa-riesz", kappa_riesz, "cg | direct Riesz solves in the kappa estimate");
  app.add_option("--format", format, "csv | json");
  app.add_option("--output,-o", output, "output file (stdout when absent)");
  app.add_flag("--pretty", pretty, "print a two-digit table instead of the raw trace");
  app.add_option("--seed", seed, "recorded seed");
  app.add_option("--sweep", sweep, "h-rel=v1,v2,...");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }

  std::string file_text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    file_text = ss.str();
    if (experiment_name.empty()) {
      try {
        experiment_name = experiment_in_json(file_text).value_or("");
      } catch (const ConfigError& e) {
        err << "invalid config: " << e.what() << '\n';
        return exit_usage;
      }
    }
  }
  const auto experiment = parse_experiment(experiment_name);
  if (!experiment) {
    err << "unknown experiment '" << experiment_name << "' (expected " << kExperiments << ")\n\n"
        << app.help();
    return exit_usage;
  }

  ExperimentConfig cfg = defaults_for(*experiment);
  std::size_t max_threads = 1;
  try {
    if (!file_text.empty()) {
      apply_json(cfg, file_text);
    }
    if (u0) cfg.u0 = *u0;
    if (eps) cfg.eps = *eps;
    if (n_dof) cfg.n_dof = *n_dof;
    if (cells) cfg.cells = *cells;
    if (p) cfg.p = *p;
    if (left) cfg.left = *left;
    if (right) cfg.right = *right;
    if (H && h_rel) throw ConfigError("H", "give either --H or --h-rel, not both");
    if (H) {
      cfg.H = *H;
      cfg.h_rel.reset();
    }
    if (h_rel) {
      cfg.h_rel = *h_rel;
      cfg.H.reset();
    }
    if (hl) cfg.hl_factor = *hl;
    if (hu) cfg.hu_factor = *hu;
    if (lambda) cfg.lambda = *lambda;
    if (t0) cfg.t0 = *t0;
    if (rtol) cfg.residual_tol = *rtol;
    if (itol) cfg.increment_tol = *itol;
    if (max_iterations) cfg.max_iterations = *max_iterations;
    if (kappa) cfg.kappa = *kappa;
    if (kappa_target) cfg.kappa_target = *kappa_target;
    if (max_cells) cfg.max_cells = *max_cells;
    if (frozen) cfg.frozen_mesh = true;
    if (phase1_tol) cfg.phase1_tol = *phase1_tol;
    if (kappa_riesz) {
      if (*kappa_riesz != "cg" && *kappa_riesz != "direct") {
        throw ConfigError("kappa-riesz", "must be cg or direct");
      }
      cfg.kappa_direct = *kappa_riesz == "direct";
    }
    if (format) {
      if (*format == "csv") {
        cfg.format = OutputFormat::csv;
      } else if (*format == "json") {
        cfg.format = OutputFormat::json;
      } else {
        throw ConfigError("format", "must be csv or json");
      }
    }
    if (output) cfg.output = *output;
    if (pretty) cfg.pretty = true;
    if (seed) cfg.seed = *seed;
    if (sweep) {
      cfg.sweep_h_rel = parse_sweep(*sweep);
    }
    cfg.validate();
    max_threads = thread_limit();
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << '\n';
    return exit_usage;
  }

  std::vector<ExperimentConfig> variants;
  if (cfg.sweep_h_rel.empty()) {
    variants.push_back(cfg);
  } else {
    for (double h : cfg.sweep_h_rel) {
      ExperimentConfig v = cfg;
      v.sweep_h_rel.clear();
      v.h_rel = h;
      v.H.reset();
      if (cfg.output) {
        v.output = with_suffix(*cfg.output, ".h-rel=" + io::format_number(h));
      }
      variants.push_back(std::move(v));
    }
  }

  std::vector<VariantResult> results(variants.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < variants.size(); i = next++) {
      try {
        results[i].result = run_experiment(variants[i]);
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(max_threads, variants.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  int code = exit_ok;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto& v = variants[i];
    if (!results[i].result) {
      err << to_string(v.experiment) << ": error: " << results[i].error << '\n';
      code = std::max(code, exit_solver_failure);
      continue;
    }
    const auto& r = *results[i].result;
    if (v.output) {
      std::ofstream file(*v.output, std::ios::binary);
      if (!file) {
        err << "cannot open output file " << *v.output << '\n';
        return exit_io;
      }
      write_report(file, v, r.report);
      if (v.pretty) {
        io::write_pretty(out, r.report,
                         v.experiment == Experiment::atan_demo ? io::CsvSchema::trials
                                                               : io::CsvSchema::iterations);
      }
    } else if (v.pretty) {
      io::write_pretty(out, r.report,
                       v.experiment == Experiment::atan_demo ? io::CsvSchema::trials
                                                             : io::CsvSchema::iterations);
    } else {
      write_report(out, v, r.report);
    }
    const bool trace_on_stdout = !v.output && !v.pretty;
    (trace_on_stdout || !r.success ? err : out) << io::summary_line(r.report) << '\n';
    if (!r.success) {
      code = std::max(code, exit_solver_failure);
    }
  }
  return code;
}

}  // namespace bsc::cli
