#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsc/problem.hpp"
#include "bsc/space.hpp"

namespace bsc {

/// Parameters of backward step control. The step size t_k is accepted when
/// H'_k = t_k ||g(u_k, t_k)||_U lies in [h_lo(), h_hi()], or when t_k = 1 and
/// H'_k < h_lo().
struct BscConfig {
  double H = 0.8;
  /// When set, H = h_rel * ||du_0||_U is fixed from the first increment.
  std::optional<double> h_rel;
  double h_lo_factor = 0.1;
  double h_hi_factor = 1.5;
  double t0 = 1.0;
  int max_bisections = 30;
  /// Weight lambda of the log-space exponential smoothing in predict_step.
  double smoothing_weight = 0.7;
  double residual_tol = 1e-11;
  std::optional<double> increment_tol;
  int max_iterations = 100;
  double full_step_threshold = 1.0 - 1e-12;
  double t_min = 1e-8;
  /// Store u_k and du_k in every IterationRecord.
  bool record_states = false;

  double h_lo() const { return h_lo_factor * H; }
  double h_hi() const { return h_hi_factor * H; }

  void validate() const;
};

enum class TrialVerdict { decrease, increase, accept };
std::string to_string(TrialVerdict verdict);

/// One evaluation of the increment provider during step selection.
struct StepTrial {
  double t = 0.0;
  double h_prime = 0.0;
  TrialVerdict verdict = TrialVerdict::accept;
  /// ||du^+||_U of the trial increment, or its signed value on the scalar space.
  double trial_increment = 0.0;
  int inner_iterations = 0;
};

/// Bracket of the bisection and the smoothed prediction it started from.
struct StepControlState {
  double t_lo = 0.0;
  double t_hi = 1.0;
  double predicted_t = 1.0;
  std::optional<double> last_t;
  std::optional<double> last_h_prime;
};

struct StepSelection {
  double t = 0.0;
  double h_prime = 0.0;
  std::vector<StepTrial> trials;
  /// u + t du and the increment there; absent when the step collapsed.
  std::optional<StateVector> next_state;
  std::optional<Increment> next_increment;
  bool collapsed = false;
  /// The bisection budget ran out and the largest t rejected as too small was taken.
  bool exhausted = false;
  StepControlState state;
};

struct BackwardDefect {
  StateVector g;
  /// The increment du^+ = -f(u - t f(u)) computed on the way.
  Increment trial;
  StateVector trial_point;
};

/// g(u, t) = f(u - t f(u)) - f(u) for f_u = f(u); one increment evaluation.
BackwardDefect compute_g(const ProblemOperator& problem, const StateVector& u,
                         const StateVector& f_u, double t);

/// Smoothed step-size prediction from the previous accepted (t, H').
double predict_step(const BscConfig& config, double t_prev, double h_prime_prev);
double predict_step(const BscConfig& config, const StepControlState& state);

/// Bisection on t with bracket [0, 1] starting from `predicted_t`.
/// `current` is the increment du_k = -f(u_k).
StepSelection select_step_size(const ProblemOperator& problem, const StateVector& u,
                               const Increment& current, const BscConfig& config,
                               double predicted_t);

struct IterationRecord {
  int k = 0;
  double t = 0.0;
  double residual_v = 0.0;
  double increment_u = 0.0;
  double h_prime = 0.0;
  /// Increment evaluations spent in step selection.
  int bisection_trials = 0;
  std::optional<double> kappa_k;
  std::optional<int> inner_iters;
  /// Scalar value of u_k and du_k on the scalar space, their U-norms otherwise.
  double u_display = 0.0;
  double du_display = 0.0;
  std::vector<StepTrial> trials;
  std::optional<StateVector> state;
  std::optional<StateVector> increment;

  int rejected_trials() const;
};

enum class SolveStatus { converged, max_iterations, step_collapse, operator_failure, saturated };
std::string to_string(SolveStatus status);

struct SolveOutcome {
  SolveStatus status = SolveStatus::max_iterations;
  StateVector final_state;
  std::vector<IterationRecord> trace;
  double final_residual_v = 0.0;
  double final_increment_u = 0.0;
  /// The H actually used (resolved from h_rel when configured).
  double H = 0.0;
  int increment_evaluations = 0;
  std::string message;
};

/// Newton-type iteration u_{k+1} = u_k + t_k du_k with backward step control.
SolveOutcome solve(const ProblemOperator& problem, const StateVector& u0, const BscConfig& config);

struct SqrtDecreaseCheck {
  bool holds = true;
  /// Largest c with sqrt||F(u_k)|| <= sqrt||F(u_0)|| - k c sqrt(H) on the prefix.
  double max_c = 0.0;
  std::size_t prefix_length = 0;
};

/// A-priori square-root decrease bound on the leading records with t_k < 1.
SqrtDecreaseCheck check_sqrt_decrease(std::span<const IterationRecord> trace, double H, double c,
                                      double full_step_threshold = 1.0 - 1e-12);

/// Scalar value on the scalar space, U-norm elsewhere.
double display_value(const StateVector& v);

}  // namespace bsc
