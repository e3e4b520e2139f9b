#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsc/trace_io.hpp"

namespace bsc::cli {

enum class Experiment { atan_demo, carrier, minsurf1d, carrier_adaptive };
std::optional<Experiment> parse_experiment(const std::string& name);
std::string to_string(Experiment experiment);

enum class OutputFormat { csv, json };

/// Invalid configuration; `field()` names the offending parameter.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::atan_demo;

  // problem
  double u0 = 2.0;
  double eps = 1e-3;
  std::size_t n_dof = 2047;
  std::size_t cells = 32;
  int p = 1;
  double left = 0.0;
  double right = 1.0;

  // outer iteration
  std::optional<double> H;
  std::optional<double> h_rel;
  double hl_factor = 0.1;
  double hu_factor = 1.5;
  double lambda = 0.7;
  double t0 = 1.0;
  double residual_tol = 1e-11;
  std::optional<double> increment_tol;
  int max_iterations = 100;

  // inner solves and refinement
  double kappa = 1e-2;
  double kappa_target = 0.5;
  std::size_t max_cells = 4096;
  bool frozen_mesh = false;
  double phase1_tol = 0.01;
  /// Riesz solves of the kappa estimator: CG with loose tolerances or direct.
  bool kappa_direct = false;

  OutputFormat format = OutputFormat::csv;
  std::optional<std::string> output;
  bool pretty = false;
  std::uint64_t seed = 0;
  std::vector<double> sweep_h_rel;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  io::ConfigEcho echo() const;
};

/// Default configuration of each experiment.
ExperimentConfig defaults_for(Experiment experiment);

/// Overlay the keys of a JSON object (flag names without the leading dashes,
/// "_" accepted for "-") onto `config`.
void apply_json(ExperimentConfig& config, const std::string& json_text);

/// The "experiment" entry of a JSON config, if any.
std::optional<std::string> experiment_in_json(const std::string& json_text);

/// "h-rel=0.1,0.05,0.01" -> {0.1, 0.05, 0.01}
std::vector<double> parse_sweep(const std::string& spec);

struct ExperimentResult {
  io::RunReport report;
  bool success = false;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Process exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_solver_failure = 1;
inline constexpr int exit_usage = 2;
inline constexpr int exit_io = 3;

/// Full command line handling; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bsc::cli
